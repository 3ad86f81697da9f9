#include "rfl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rfl/errors.hpp"

namespace rfl {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + v);
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + v);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean value for " + key + ": " + v);
}

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string Config::to_text() const {
  std::ostringstream out;
  out << "scene=" << scene << "\n";
  out << "width=" << width << "\n";
  out << "height=" << height << "\n";
  out << "k_train=" << k_train << "\n";
  out << "k_reflect=" << k_reflect << "\n";
  out << "k_eval=" << k_eval << "\n";
  out << "grid=" << grid << "\n";
  out << "atten_grid=" << atten_grid << "\n";
  out << "near=" << fmt_double(near) << "\n";
  out << "far=" << fmt_double(far) << "\n";
  out << "phase_a=" << phase_a << "\n";
  out << "phase_b=" << phase_b << "\n";
  out << "phase_c=" << phase_c << "\n";
  out << "lr_grid=" << fmt_double(lr_grid) << "\n";
  out << "lr_plane=" << fmt_double(lr_plane) << "\n";
  out << "density_init=" << fmt_double(density_init) << "\n";
  out << "lambda_edge=" << fmt_double(lambda_edge) << "\n";
  out << "clip_norm=" << fmt_double(clip_norm) << "\n";
  out << "patches_per_iter=" << patches_per_iter << "\n";
  out << "seed=" << seed << "\n";
  out << "threads=" << threads << "\n";
  out << "views_train=" << views_train << "\n";
  out << "views_val=" << views_val << "\n";
  out << "views_outside=" << views_outside << "\n";
  out << "supersample=" << supersample << "\n";
  out << "contraction=" << (contraction ? "true" : "false") << "\n";
  out << "edge_loss=" << (edge_loss ? "true" : "false") << "\n";
  out << "plane_refine=" << (plane_refine ? "true" : "false") << "\n";
  out << "scheduling=" << (scheduling ? "true" : "false") << "\n";
  out << "reflection_rays=" << (reflection_rays ? "true" : "false") << "\n";
  out << "plane_rot_deg=" << fmt_double(plane_rot_deg) << "\n";
  out << "plane_trans_frac=" << fmt_double(plane_trans_frac) << "\n";
  out << "png=" << (png ? "true" : "false") << "\n";
  return out.str();
}

void Config::set(const std::string& key, const std::string& value) {
  if (key == "scene")
    scene = value;
  else if (key == "width")
    width = parse_int(key, value);
  else if (key == "height")
    height = parse_int(key, value);
  else if (key == "k_train")
    k_train = parse_int(key, value);
  else if (key == "k_reflect")
    k_reflect = parse_int(key, value);
  else if (key == "k_eval")
    k_eval = parse_int(key, value);
  else if (key == "grid")
    grid = parse_int(key, value);
  else if (key == "atten_grid")
    atten_grid = parse_int(key, value);
  else if (key == "near")
    near = parse_double(key, value);
  else if (key == "far")
    far = parse_double(key, value);
  else if (key == "phase_a")
    phase_a = parse_int(key, value);
  else if (key == "phase_b")
    phase_b = parse_int(key, value);
  else if (key == "phase_c")
    phase_c = parse_int(key, value);
  else if (key == "lr_grid")
    lr_grid = parse_double(key, value);
  else if (key == "lr_plane")
    lr_plane = parse_double(key, value);
  else if (key == "density_init")
    density_init = parse_double(key, value);
  else if (key == "lambda_edge")
    lambda_edge = parse_double(key, value);
  else if (key == "clip_norm")
    clip_norm = parse_double(key, value);
  else if (key == "patches_per_iter")
    patches_per_iter = parse_int(key, value);
  else if (key == "seed")
    seed = parse_u64(key, value);
  else if (key == "threads")
    threads = parse_int(key, value);
  else if (key == "views_train")
    views_train = parse_int(key, value);
  else if (key == "views_val")
    views_val = parse_int(key, value);
  else if (key == "views_outside")
    views_outside = parse_int(key, value);
  else if (key == "supersample")
    supersample = parse_int(key, value);
  else if (key == "contraction")
    contraction = parse_bool(key, value);
  else if (key == "edge_loss")
    edge_loss = parse_bool(key, value);
  else if (key == "plane_refine")
    plane_refine = parse_bool(key, value);
  else if (key == "scheduling")
    scheduling = parse_bool(key, value);
  else if (key == "reflection_rays")
    reflection_rays = parse_bool(key, value);
  else if (key == "plane_rot_deg")
    plane_rot_deg = parse_double(key, value);
  else if (key == "plane_trans_frac")
    plane_trans_frac = parse_double(key, value);
  else if (key == "png")
    png = parse_bool(key, value);
  else
    throw ConfigError("unknown config key: " + key);
}

Config Config::from_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_text(text);
}

void Config::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  pos(width, "width");
  pos(height, "height");
  pos(k_train, "k_train");
  pos(k_reflect, "k_reflect");
  pos(k_eval, "k_eval");
  pos(grid, "grid");
  pos(atten_grid, "atten_grid");
  pos(far - near, "far - near");
  if (near < 0.0) throw ConfigError("near must be nonnegative");
  if (grid < 2 || atten_grid < 2) throw ConfigError("grid resolutions must be at least 2");
  pos(lr_grid, "lr_grid");
  pos(lr_plane, "lr_plane");
  if (lambda_edge < 0.0) throw ConfigError("lambda_edge must be nonnegative");
  pos(clip_norm, "clip_norm");
  pos(patches_per_iter, "patches_per_iter");
  if (phase_a < 0 || phase_b < 0 || phase_c < 0)
    throw ConfigError("phase lengths must be nonnegative");
  if (phase_a + phase_b + phase_c <= 0) throw ConfigError("schedule is empty");
  pos(views_train, "views_train");
  pos(views_val, "views_val");
  pos(views_outside, "views_outside");
  pos(supersample, "supersample");
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  if (width < 8 || height < 8) throw ConfigError("images must be at least 8x8 for patches");
}

}  // namespace rfl
