#include "pseopt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

namespace pseopt {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_float(float v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { kFloat, kUchar, kInt };

struct PlyProperty {
  PlyType type;
  std::string name;
};

PlyType parse_ply_type(const std::string& token, long line) {
  if (token == "float" || token == "float32" || token == "double" || token == "float64")
    return PlyType::kFloat;
  if (token == "uchar" || token == "uint8") return PlyType::kUchar;
  if (token == "int" || token == "int32") return PlyType::kInt;
  throw ParseError("unsupported PLY property type '" + token + "'", line);
}

int color_byte(double v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void ply_write(const ParticleSet& pset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing", path);
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment pseopt particle cloud v1\n"
      << "element vertex " << pset.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "property float opacity\n"
      << "property float scale_x\nproperty float scale_y\nproperty float scale_z\n"
      << "property int object_id\n"
      << "end_header\n";
  for (const auto& p : pset.particles) {
    out << format_float(static_cast<float>(p.position.x())) << ' '
        << format_float(static_cast<float>(p.position.y())) << ' '
        << format_float(static_cast<float>(p.position.z())) << ' '
        << color_byte(p.color.x()) << ' ' << color_byte(p.color.y()) << ' '
        << color_byte(p.color.z()) << ' '
        << format_float(static_cast<float>(p.opacity)) << ' '
        << format_float(static_cast<float>(p.scale.x())) << ' '
        << format_float(static_cast<float>(p.scale.y())) << ' '
        << format_float(static_cast<float>(p.scale.z())) << ' ' << p.object_id << '\n';
  }
  if (!out.flush()) throw IoError("write failed", path);
}

ParticleSet ply_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path);

  long line_no = 0;
  std::string line;
  const auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
  };

  if (!next_line() || line != "ply") throw ParseError("missing 'ply' magic", line_no);
  if (!next_line() || line != "format ascii 1.0")
    throw ParseError("expected 'format ascii 1.0'", line_no);

  std::vector<PlyProperty> props;
  long vertex_count = -1;
  bool in_vertex_element = false;
  while (true) {
    if (!next_line()) throw ParseError("header ended before end_header", line_no);
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word.empty()) continue;
    if (word == "element") {
      std::string name;
      long count = -1;
      ls >> name >> count;
      if (name == "vertex") {
        if (count < 0) throw ParseError("bad vertex count", line_no);
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (vertex_count < 0)
          throw ParseError("element '" + name + "' precedes the vertex element", line_no);
        in_vertex_element = false;  // trailing elements are ignored
      }
      continue;
    }
    if (word == "property") {
      if (!in_vertex_element) continue;
      std::string type_token, name;
      ls >> type_token;
      if (type_token == "list") throw ParseError("list properties are unsupported", line_no);
      ls >> name;
      if (name.empty()) throw ParseError("property without a name", line_no);
      props.push_back({parse_ply_type(type_token, line_no), name});
      continue;
    }
    throw ParseError("unexpected header token '" + word + "'", line_no);
  }
  if (vertex_count < 0) throw ParseError("no vertex element declared", line_no);

  // Type expectations for the properties this format understands.
  const auto expect = [&](const std::string& name, PlyType got, PlyType want) {
    if (got != want)
      throw ParseError("property '" + name + "' has the wrong type", line_no);
  };
  bool has_x = false, has_y = false, has_z = false;
  for (const auto& pr : props) {
    if (pr.name == "x" || pr.name == "y" || pr.name == "z" || pr.name == "opacity" ||
        pr.name == "scale_x" || pr.name == "scale_y" || pr.name == "scale_z")
      expect(pr.name, pr.type, PlyType::kFloat);
    else if (pr.name == "red" || pr.name == "green" || pr.name == "blue")
      expect(pr.name, pr.type, PlyType::kUchar);
    else if (pr.name == "object_id")
      expect(pr.name, pr.type, PlyType::kInt);
    has_x |= pr.name == "x";
    has_y |= pr.name == "y";
    has_z |= pr.name == "z";
  }
  if (!has_x || !has_y || !has_z) throw ParseError("missing x/y/z properties", line_no);

  ParticleSet pset;
  pset.particles.reserve(static_cast<std::size_t>(vertex_count));
  for (long v = 0; v < vertex_count; ++v) {
    if (!next_line())
      throw ParseError("file truncated: expected " + std::to_string(vertex_count) +
                           " vertices, got " + std::to_string(v),
                       line_no);
    std::istringstream ls(line);
    SplatParticle p;
    p.opacity = 1.0;
    p.scale = Vec3::Constant(0.01);
    p.color = Vec3::Ones();
    p.object_id = 2;
    for (const auto& pr : props) {
      double value;
      if (!(ls >> value))
        throw ParseError("short or malformed vertex row", line_no);
      if (pr.type == PlyType::kUchar || pr.type == PlyType::kInt) {
        if (value != std::floor(value))
          throw ParseError("integer property '" + pr.name + "' has a fractional value",
                           line_no);
      }
      if (pr.name == "x") p.position.x() = value;
      else if (pr.name == "y") p.position.y() = value;
      else if (pr.name == "z") p.position.z() = value;
      else if (pr.name == "red") p.color.x() = value / 255.0;
      else if (pr.name == "green") p.color.y() = value / 255.0;
      else if (pr.name == "blue") p.color.z() = value / 255.0;
      else if (pr.name == "opacity") p.opacity = value;
      else if (pr.name == "scale_x") p.scale.x() = value;
      else if (pr.name == "scale_y") p.scale.y() = value;
      else if (pr.name == "scale_z") p.scale.z() = value;
      else if (pr.name == "object_id") p.object_id = static_cast<int>(value);
      // unknown properties parse and drop
    }
    std::string trailing;
    if (ls >> trailing) throw ParseError("extra values on vertex row", line_no);
    pset.particles.push_back(p);
  }

  // Simulation state is not persisted; refill maps with conventions:
  // object 1 is the static background, everything else is dynamic.
  for (const auto& p : pset.particles) {
    if (!pset.material_of_object.count(p.object_id)) {
      pset.material_of_object[p.object_id] = MaterialParams{};
      pset.mobility_of_object[p.object_id] =
          p.object_id == 1 ? Mobility::kStatic : Mobility::kDynamic;
    }
  }
  pset.validate();
  return pset;
}

// ---------------------------------------------------------------------------
// Telemetry CSV

static constexpr const char* kTelemetryHeader =
    "step,loss_total,loss_image,loss_ssim,loss_alpha,loss_sds,grad_norm_mean,"
    "penetration_fraction,clamp_count,wall_ms";

void telemetry_csv(const OptimTelemetry& telemetry, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing", path);
  out << kTelemetryHeader << '\n';
  for (const auto& r : telemetry.steps) {
    out << r.step << ',' << format_double(r.loss_total) << ',' << format_double(r.loss_image)
        << ',' << format_double(r.loss_ssim) << ',' << format_double(r.loss_alpha) << ','
        << format_double(r.loss_sds) << ',' << format_double(r.grad_norm_mean) << ','
        << format_double(r.penetration_fraction) << ',' << r.clamp_count << ','
        << format_double(r.wall_ms) << '\n';
  }
  if (!out.flush()) throw IoError("write failed", path);
}

OptimTelemetry telemetry_from_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty telemetry file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTelemetryHeader) throw ParseError("unexpected telemetry header", line_no);

  OptimTelemetry t;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 10) throw ParseError("expected 10 columns", line_no);
    const auto to_d = [&](const std::string& s) {
      double v{};
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad number '" + s + "'", line_no);
      return v;
    };
    StepRecord r;
    r.step = static_cast<int>(to_d(cells[0]));
    r.loss_total = to_d(cells[1]);
    r.loss_image = to_d(cells[2]);
    r.loss_ssim = to_d(cells[3]);
    r.loss_alpha = to_d(cells[4]);
    r.loss_sds = to_d(cells[5]);
    r.grad_norm_mean = to_d(cells[6]);
    r.penetration_fraction = to_d(cells[7]);
    r.clamp_count = static_cast<long>(to_d(cells[8]));
    r.wall_ms = to_d(cells[9]);
    t.steps.push_back(r);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, long line) {
  double out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError("expected a number, got '" + v + "'", line);
  return out;
}

long parse_int(const std::string& v, long line) {
  long out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError("expected an integer, got '" + v + "'", line);
  return out;
}

std::uint64_t parse_u64(const std::string& v, long line) {
  std::uint64_t out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ParseError("expected an unsigned integer, got '" + v + "'", line);
  return out;
}

bool parse_bool(const std::string& v, long line) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ParseError("expected a boolean, got '" + v + "'", line);
}

std::vector<double> parse_numbers(const std::string& v, std::size_t count, long line) {
  std::istringstream ss(v);
  std::vector<double> out;
  double x;
  while (ss >> x) out.push_back(x);
  if (out.size() != count)
    throw ParseError("expected " + std::to_string(count) + " numbers, got '" + v + "'", line);
  return out;
}

Vec3 parse_vec3(const std::string& v, long line) {
  auto n = parse_numbers(v, 3, line);
  return Vec3(n[0], n[1], n[2]);
}

Vec2 parse_vec2(const std::string& v, long line) {
  auto n = parse_numbers(v, 2, line);
  return Vec2(n[0], n[1]);
}

ShapeKind parse_shape_kind(const std::string& v, long line) {
  if (v == "sphere") return ShapeKind::kSphere;
  if (v == "box") return ShapeKind::kBox;
  if (v == "rounded_box") return ShapeKind::kRoundedBox;
  if (v == "capsule") return ShapeKind::kCapsule;
  if (v == "shell") return ShapeKind::kShell;
  throw ParseError("unknown shape kind '" + v + "'", line);
}

std::string shape_kind_to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kRoundedBox: return "rounded_box";
    case ShapeKind::kCapsule: return "capsule";
    case ShapeKind::kShell: return "shell";
  }
  return "?";
}

std::string join_path(const std::string& base_dir, const std::string& p) {
  if (p.empty() || base_dir.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / fp).string();
}

// Applies one key/value pair. `line` feeds error messages only.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value, long line,
               const std::string& base_dir) {
  if (key == "scene.grid_resolution") cfg.scene.grid_resolution = static_cast<int>(parse_int(value, line));
  else if (key == "scene.domain_min") cfg.scene.domain_min = parse_vec3(value, line);
  else if (key == "scene.domain_max") cfg.scene.domain_max = parse_vec3(value, line);
  else if (key == "scene.gravity") cfg.scene.gravity = parse_vec3(value, line);
  else if (key == "scene.boundary_margin_cells") cfg.scene.boundary_margin_cells = static_cast<int>(parse_int(value, line));
  else if (key == "scene.sdf_boundary_mode") {
    if (value == "sticky") cfg.scene.sdf_boundary_mode = BoundaryMode::kSticky;
    else if (value == "slip") cfg.scene.sdf_boundary_mode = BoundaryMode::kSlip;
    else throw ParseError("expected sticky|slip, got '" + value + "'", line);
  } else if (key.rfind("material.", 0) == 0) {
    const std::size_t dot = key.find('.', 9);
    if (dot == std::string::npos) throw ParseError("bad material key '" + key + "'", line);
    const int id = static_cast<int>(parse_int(key.substr(9, dot - 9), line));
    const std::string field = key.substr(dot + 1);
    MaterialParams& mat = cfg.materials[id];
    if (field == "youngs_modulus") mat.youngs_modulus = parse_double(value, line);
    else if (field == "poisson_ratio") mat.poisson_ratio = parse_double(value, line);
    else if (field == "density") mat.density = parse_double(value, line);
    else if (field == "model") {
      if (value == "fixed_corotated") mat.model = ConstitutiveModel::kFixedCorotated;
      else if (value == "neo_hookean") mat.model = ConstitutiveModel::kNeoHookean;
      else throw ParseError("expected fixed_corotated|neo_hookean, got '" + value + "'", line);
    } else throw ParseError("unknown material field '" + field + "'", line);
  } else if (key == "optimizer.steps_K") cfg.optimizer.steps = static_cast<int>(parse_int(value, line));
  else if (key == "optimizer.substeps_N") cfg.optimizer.substeps = static_cast<int>(parse_int(value, line));
  else if (key == "optimizer.learning_rate_gamma") cfg.optimizer.learning_rate = parse_double(value, line);
  else if (key == "optimizer.mode") cfg.optimizer.mode = optim_mode_from_string(value);
  else if (key == "optimizer.gravity_during_opt") cfg.optimizer.gravity_during_opt = parse_bool(value, line);
  else if (key == "optimizer.gravity_during_ppps") cfg.optimizer.gravity_during_ppps = parse_bool(value, line);
  else if (key == "optimizer.velocity_sign") {
    if (value == "descent") cfg.optimizer.velocity_sign = VelocitySign::kDescent;
    else if (value == "raw_gradient") cfg.optimizer.velocity_sign = VelocitySign::kRawGradient;
    else throw ParseError("expected descent|raw_gradient, got '" + value + "'", line);
  } else if (key == "optimizer.carry_deformation") cfg.optimizer.carry_deformation = parse_bool(value, line);
  else if (key == "losses.lambda1") cfg.losses.lambda1 = parse_double(value, line);
  else if (key == "losses.lambda2") cfg.losses.lambda2 = parse_double(value, line);
  else if (key == "losses.lambda3") cfg.losses.lambda3 = parse_double(value, line);
  else if (key == "losses.camera.view_dir") cfg.losses.camera.view_dir = view_axis_from_string(value);
  else if (key == "losses.camera.image_size") {
    auto n = parse_numbers(value, 2, line);
    cfg.losses.camera.image_width = static_cast<int>(n[0]);
    cfg.losses.camera.image_height = static_cast<int>(n[1]);
  } else if (key == "losses.camera.window_min") cfg.losses.camera.window_min = parse_vec2(value, line);
  else if (key == "losses.camera.window_max") cfg.losses.camera.window_max = parse_vec2(value, line);
  else if (key == "losses.target_color") cfg.losses.target_color_path = join_path(base_dir, value);
  else if (key == "losses.target_alpha") cfg.losses.target_alpha_path = join_path(base_dir, value);
  else if (key == "provider.kind") {
    if (value != "none" && value != "shape_prior" && value != "noisy_shape_prior")
      throw ParseError("expected none|shape_prior|noisy_shape_prior, got '" + value + "'",
                       line);
    cfg.provider.kind = value;
  } else if (key == "provider.noise_sigma") cfg.provider.noise_sigma = parse_double(value, line);
  else if (key == "provider.shape.kind") cfg.provider.shape.kind = parse_shape_kind(value, line);
  else if (key == "provider.shape.center") cfg.provider.shape.center = parse_vec3(value, line);
  else if (key == "provider.shape.radius") cfg.provider.shape.radius = parse_double(value, line);
  else if (key == "provider.shape.half_extent") cfg.provider.shape.half_extent = parse_vec3(value, line);
  else if (key == "provider.shape.rounding") cfg.provider.shape.rounding = parse_double(value, line);
  else if (key == "provider.shape.cap_a") cfg.provider.shape.cap_a = parse_vec3(value, line);
  else if (key == "provider.shape.cap_b") cfg.provider.shape.cap_b = parse_vec3(value, line);
  else if (key == "provider.shape.inner_radius") cfg.provider.shape.inner_radius = parse_double(value, line);
  else if (key == "input.particles") cfg.input.particles_path = join_path(base_dir, value);
  else if (key == "input.sdf") cfg.input.sdf_path = join_path(base_dir, value);
  else if (key == "output.directory") cfg.output.directory = join_path(base_dir, value);
  else if (key == "output.checkpoint_interval") cfg.output.checkpoint_interval = static_cast<int>(parse_int(value, line));
  else if (key == "output.seed") cfg.output.seed = parse_u64(value, line);
  else throw ParseError("unknown config key '" + key + "'", line);
}

}  // namespace

void RunConfig::validate() const {
  scene.validate();
  optimizer.validate();
  if (losses.lambda1 < 0.0 || losses.lambda2 < 0.0 || losses.lambda3 < 0.0)
    throw ConfigError("loss weights must be >= 0");
  losses.camera.validate();
  for (const auto& [id, mat] : materials) mat.validate();
  if (output.checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be >= 0");
}

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_key(cfg, key, value, line_no, base_dir);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg =
      parse_config_text(ss.str(), std::filesystem::path(path).parent_path().string());
  for (const std::string& p :
       {cfg.losses.target_color_path, cfg.losses.target_alpha_path,
        cfg.input.particles_path, cfg.input.sdf_path}) {
    if (!p.empty() && !std::filesystem::exists(p))
      throw ConfigError("referenced path does not exist: " + p);
  }
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  // Callers re-validate after the last override so partial states are fine.
  apply_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0, "");
}

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  const auto v3 = [](const Vec3& v) {
    return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
  };
  const auto v2 = [](const Vec2& v) {
    return format_double(v.x()) + " " + format_double(v.y());
  };
  out << "scene.grid_resolution = " << cfg.scene.grid_resolution << '\n';
  out << "scene.domain_min = " << v3(cfg.scene.domain_min) << '\n';
  out << "scene.domain_max = " << v3(cfg.scene.domain_max) << '\n';
  out << "scene.gravity = " << v3(cfg.scene.gravity) << '\n';
  out << "scene.boundary_margin_cells = " << cfg.scene.boundary_margin_cells << '\n';
  out << "scene.sdf_boundary_mode = "
      << (cfg.scene.sdf_boundary_mode == BoundaryMode::kSticky ? "sticky" : "slip") << '\n';
  for (const auto& [id, mat] : cfg.materials) {
    const std::string prefix = "material." + std::to_string(id) + ".";
    out << prefix << "youngs_modulus = " << format_double(mat.youngs_modulus) << '\n';
    out << prefix << "poisson_ratio = " << format_double(mat.poisson_ratio) << '\n';
    out << prefix << "density = " << format_double(mat.density) << '\n';
    out << prefix << "model = "
        << (mat.model == ConstitutiveModel::kFixedCorotated ? "fixed_corotated"
                                                            : "neo_hookean")
        << '\n';
  }
  out << "optimizer.steps_K = " << cfg.optimizer.steps << '\n';
  out << "optimizer.substeps_N = " << cfg.optimizer.substeps << '\n';
  out << "optimizer.learning_rate_gamma = " << format_double(cfg.optimizer.learning_rate)
      << '\n';
  out << "optimizer.mode = " << to_string(cfg.optimizer.mode) << '\n';
  out << "optimizer.gravity_during_opt = "
      << (cfg.optimizer.gravity_during_opt ? "true" : "false") << '\n';
  out << "optimizer.gravity_during_ppps = "
      << (cfg.optimizer.gravity_during_ppps ? "true" : "false") << '\n';
  out << "optimizer.velocity_sign = "
      << (cfg.optimizer.velocity_sign == VelocitySign::kDescent ? "descent" : "raw_gradient")
      << '\n';
  out << "optimizer.carry_deformation = "
      << (cfg.optimizer.carry_deformation ? "true" : "false") << '\n';
  out << "losses.lambda1 = " << format_double(cfg.losses.lambda1) << '\n';
  out << "losses.lambda2 = " << format_double(cfg.losses.lambda2) << '\n';
  out << "losses.lambda3 = " << format_double(cfg.losses.lambda3) << '\n';
  out << "losses.camera.view_dir = " << to_string(cfg.losses.camera.view_dir) << '\n';
  out << "losses.camera.image_size = " << cfg.losses.camera.image_width << ' '
      << cfg.losses.camera.image_height << '\n';
  out << "losses.camera.window_min = " << v2(cfg.losses.camera.window_min) << '\n';
  out << "losses.camera.window_max = " << v2(cfg.losses.camera.window_max) << '\n';
  out << "losses.target_color = " << cfg.losses.target_color_path << '\n';
  out << "losses.target_alpha = " << cfg.losses.target_alpha_path << '\n';
  out << "provider.kind = " << cfg.provider.kind << '\n';
  out << "provider.noise_sigma = " << format_double(cfg.provider.noise_sigma) << '\n';
  out << "provider.shape.kind = " << shape_kind_to_string(cfg.provider.shape.kind) << '\n';
  out << "provider.shape.center = " << v3(cfg.provider.shape.center) << '\n';
  out << "provider.shape.radius = " << format_double(cfg.provider.shape.radius) << '\n';
  out << "provider.shape.half_extent = " << v3(cfg.provider.shape.half_extent) << '\n';
  out << "provider.shape.rounding = " << format_double(cfg.provider.shape.rounding) << '\n';
  out << "provider.shape.cap_a = " << v3(cfg.provider.shape.cap_a) << '\n';
  out << "provider.shape.cap_b = " << v3(cfg.provider.shape.cap_b) << '\n';
  out << "provider.shape.inner_radius = " << format_double(cfg.provider.shape.inner_radius)
      << '\n';
  out << "input.particles = " << cfg.input.particles_path << '\n';
  out << "input.sdf = " << cfg.input.sdf_path << '\n';
  out << "output.directory = " << cfg.output.directory << '\n';
  out << "output.checkpoint_interval = " << cfg.output.checkpoint_interval << '\n';
  out << "output.seed = " << cfg.output.seed << '\n';
  return out.str();
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing", path);
  out << config_to_text(cfg);
  if (!out.flush()) throw IoError("write failed", path);
}

}  // namespace pseopt
