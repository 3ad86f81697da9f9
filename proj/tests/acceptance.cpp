// Acceptance suite: placeholder, filled in after bring-up.
#include <cstdio>
int main() {
  std::printf("acceptance suite not yet implemented\n");
  return 1;
}
