#include "sgdepth/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <sstream>

#include "sgdepth/rng.hpp"

namespace sgdepth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNearClip = 0.1;

double deg2rad(double d) { return d * kPi / 180.0; }

struct Mat3 {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{1, 0, 0, 0, c, -s, 0, s, c}};
  }
  static Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, 0, s, 0, 1, 0, -s, 0, c}};
  }
  static Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
  }
  // intrinsic XYZ: R = Rx * Ry * Rz
  static Mat3 euler_xyz(const Vec3& e) {
    return rot_x(e.x) * rot_y(e.y) * rot_z(e.z);
  }
  static Mat3 from_columns(const Vec3& a, const Vec3& b, const Vec3& c) {
    return {{a.x, b.x, c.x, a.y, b.y, c.y, a.z, b.z, c.z}};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r;
  }
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Vec3 transposed_mul(const Vec3& v) const {
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z,
            m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }
};

struct CameraFrame {
  Vec3 origin;
  Mat3 rot;  // camera-to-world
};

// Position on the azimuth/elevation sphere looking at the scene origin
// (z up), then intrinsic pan (about camera y), tilt (about x), roll (about z).
CameraFrame camera_frame(const CameraPose& p) {
  const double az = deg2rad(p.azimuth_deg);
  const double el = deg2rad(p.elevation_deg);
  Vec3 pos{p.distance * std::cos(el) * std::cos(az),
           p.distance * std::cos(el) * std::sin(az),
           p.distance * std::sin(el)};
  const Vec3 fwd = (-pos).normalized();
  Vec3 right = fwd.cross({0, 0, 1});
  if (right.norm() < 1e-9) right = {1, 0, 0};
  right = right.normalized();
  const Vec3 down = fwd.cross(right) * -1.0;
  // columns: x right, y down(image v), z forward
  Mat3 base = Mat3::from_columns(right, -down * -1.0, fwd);
  // image v axis points "down": y_cam = z x x
  const Vec3 ycam = fwd.cross(right);
  base = Mat3::from_columns(right, ycam, fwd);
  const Mat3 pert = Mat3::rot_y(deg2rad(p.pan_deg)) *
                    Mat3::rot_x(deg2rad(p.tilt_deg)) *
                    Mat3::rot_z(deg2rad(p.roll_deg));
  return {pos, base * pert};
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int prim = -1;
  Vec3 point_local;   // hit in primitive frame, for texturing
  Vec3 normal_world;
};

// All intersections happen in the primitive's local frame.
bool intersect_local(const Primitive& pr, const Vec3& o, const Vec3& d,
                     double tmin, double& t_out, Vec3& n_local) {
  switch (pr.shape) {
    case Shape::Sphere: {
      const double r = pr.size.x;
      const double a = d.dot(d);
      const double b = 2.0 * o.dot(d);
      const double c = o.dot(o) - r * r;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return false;
      const double sq = std::sqrt(disc);
      double t = (-b - sq) / (2 * a);
      if (t < tmin) t = (-b + sq) / (2 * a);
      if (t < tmin) return false;
      const Vec3 p = o + d * t;
      t_out = t;
      n_local = p.normalized();
      return true;
    }
    case Shape::Box: {
      const double h[3] = {pr.size.x, pr.size.y, pr.size.z};
      const double oo[3] = {o.x, o.y, o.z};
      const double dd[3] = {d.x, d.y, d.z};
      double tlo = -std::numeric_limits<double>::infinity();
      double thi = std::numeric_limits<double>::infinity();
      int lo_axis = 0;
      double lo_sign = 1;
      for (int i = 0; i < 3; ++i) {
        if (std::abs(dd[i]) < 1e-12) {
          if (std::abs(oo[i]) > h[i]) return false;
          continue;
        }
        double t1 = (-h[i] - oo[i]) / dd[i];
        double t2 = (h[i] - oo[i]) / dd[i];
        double sgn = -1;
        if (t1 > t2) {
          std::swap(t1, t2);
          sgn = 1;
        }
        if (t1 > tlo) {
          tlo = t1;
          lo_axis = i;
          lo_sign = sgn;
        }
        thi = std::min(thi, t2);
      }
      if (tlo > thi) return false;
      double t = tlo;
      bool entering = true;
      if (t < tmin) {
        t = thi;
        entering = false;
        if (t < tmin) return false;
      }
      t_out = t;
      if (entering) {
        n_local = {0, 0, 0};
        (&n_local.x)[lo_axis] = lo_sign;
      } else {
        // leaving face: pick by largest |p_i| / h_i
        const Vec3 p = o + d * t;
        const double rx = std::abs(p.x) / h[0];
        const double ry = std::abs(p.y) / h[1];
        const double rz = std::abs(p.z) / h[2];
        if (rx >= ry && rx >= rz)
          n_local = {p.x > 0 ? 1.0 : -1.0, 0, 0};
        else if (ry >= rz)
          n_local = {0, p.y > 0 ? 1.0 : -1.0, 0};
        else
          n_local = {0, 0, p.z > 0 ? 1.0 : -1.0};
      }
      return true;
    }
    case Shape::Cylinder: {
      const double r = pr.size.x;
      const double hh = pr.size.y;
      double best = std::numeric_limits<double>::infinity();
      Vec3 bn;
      const double a = d.x * d.x + d.y * d.y;
      if (a > 1e-16) {
        const double b = 2.0 * (o.x * d.x + o.y * d.y);
        const double c = o.x * o.x + o.y * o.y - r * r;
        const double disc = b * b - 4 * a * c;
        if (disc >= 0) {
          const double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
            if (t < tmin || t >= best) continue;
            const double z = o.z + t * d.z;
            if (std::abs(z) <= hh) {
              best = t;
              const Vec3 p = o + d * t;
              bn = Vec3{p.x, p.y, 0}.normalized();
            }
          }
        }
      }
      if (std::abs(d.z) > 1e-12) {
        for (double zc : {hh, -hh}) {
          const double t = (zc - o.z) / d.z;
          if (t < tmin || t >= best) continue;
          const Vec3 p = o + d * t;
          if (p.x * p.x + p.y * p.y <= r * r) {
            best = t;
            bn = {0, 0, zc > 0 ? 1.0 : -1.0};
          }
        }
      }
      if (!std::isfinite(best)) return false;
      t_out = best;
      n_local = bn;
      return true;
    }
    case Shape::Plane: {
      if (std::abs(d.z) < 1e-12) return false;
      const double t = -o.z / d.z;
      if (t < tmin) return false;
      const Vec3 p = o + d * t;
      const double rad = pr.size.x;  // bounded disk when > 0
      if (rad > 0 && p.x * p.x + p.y * p.y > rad * rad) return false;
      t_out = t;
      n_local = {0, 0, 1};
      return true;
    }
  }
  return false;
}

// Two-octave value noise on the integer lattice; range about [0, 1].
double value_noise(const Vec3& p, std::uint64_t seed) {
  auto lattice = [seed](std::int64_t ix, std::int64_t iy, std::int64_t iz) {
    std::uint64_t h = hash_combine(seed, std::uint64_t(ix) * 0x8da6b343ULL ^
                                             std::uint64_t(iy) * 0xd8163841ULL ^
                                             std::uint64_t(iz) * 0xcb1ab31fULL);
    return double(h >> 11) * 0x1.0p-53;
  };
  auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
  auto sample = [&](Vec3 q) {
    const double fx = std::floor(q.x), fy = std::floor(q.y), fz = std::floor(q.z);
    const auto ix = std::int64_t(fx), iy = std::int64_t(fy), iz = std::int64_t(fz);
    const double tx = fade(q.x - fx), ty = fade(q.y - fy), tz = fade(q.z - fz);
    double acc = 0;
    for (int dz = 0; dz <= 1; ++dz)
      for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
          const double wgt = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) *
                             (dz ? tz : 1 - tz);
          acc += wgt * lattice(ix + dx, iy + dy, iz + dz);
        }
    return acc;
  };
  return (2.0 / 3.0) * sample(p) + (1.0 / 3.0) * sample(p * 2.0 + Vec3{17.31, 9.77, 31.13});
}

double texture_factor(const Primitive& pr, const Vec3& p_local) {
  if (pr.texture_amp <= 0) return 1.0;
  const double n = value_noise(p_local * pr.texture_scale, pr.texture_seed);
  const double f = 1.0 + pr.texture_amp * (2.0 * n - 1.0);
  return std::max(0.0, f);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (width <= 0 || height <= 0)
    throw UsageError("generator config: nonpositive image size");
  if (min_primitives < 1 || max_primitives < min_primitives)
    throw UsageError("generator config: empty primitive count range");
  if (min_lights < 1 || max_lights < min_lights)
    throw UsageError("generator config: empty light count range");
  auto in = [](double lo, double hi, double a, double b) {
    return a >= lo && b <= hi && a <= b;
  };
  if (!in(-30, 30, pan_min_deg, pan_max_deg) ||
      !in(-30, 30, tilt_min_deg, tilt_max_deg) ||
      !in(-30, 30, roll_min_deg, roll_max_deg))
    throw UsageError("generator config: pan/tilt/roll range outside [-30, 30] deg");
  if (!in(5, 30, elevation_min_deg, elevation_max_deg))
    throw UsageError("generator config: elevation range outside [5, 30] deg");
  if (distance_min <= 0 || distance_max < distance_min)
    throw UsageError("generator config: bad camera distance range");
  if (distance_max + dome_radius > d_max)
    throw UsageError("generator config: dome not reachable within d_max");
  if (dome_radius < distance_max + 0.2)
    throw UsageError("generator config: camera would leave the dome");
  if (distance_min - place_radius - size_max < kNearClip)
    throw UsageError("generator config: scene may come closer than 0.1 m");
  if (dropout_target < 0 || dropout_target > 1 || dropout_band < 0)
    throw UsageError("generator config: bad dropout target");
  if (size_min <= 0 || size_max < size_min)
    throw UsageError("generator config: bad size range");
}

CameraModel GeneratorConfig::camera() const {
  CameraModel c;
  c.width = width;
  c.height = height;
  c.fx = c.fy = focal_factor * width;
  c.cx = width / 2.0;
  c.cy = height / 2.0;
  return c;
}

std::uint64_t GeneratorConfig::hash() const {
  std::ostringstream os;
  os.precision(17);
  os << width << ' ' << height << ' ' << focal_factor << ' ' << d_max << ' '
     << texture_amp_min << ' ' << texture_amp_max << ' ' << texture_scale_min
     << ' ' << texture_scale_max << ' ' << min_lights << ' ' << max_lights
     << ' ' << light_intensity_min << ' ' << light_intensity_max << ' '
     << light_radius_min << ' ' << light_radius_max << ' ' << ambient_min
     << ' ' << ambient_max << ' ' << pan_min_deg << ' ' << pan_max_deg << ' '
     << tilt_min_deg << ' ' << tilt_max_deg << ' ' << roll_min_deg << ' '
     << roll_max_deg << ' ' << elevation_min_deg << ' ' << elevation_max_deg
     << ' ' << distance_min << ' ' << distance_max << ' ' << min_primitives
     << ' ' << max_primitives << ' ' << size_min << ' ' << size_max << ' '
     << place_radius << ' ' << glossy_prob << ' ' << albedo_min << ' '
     << albedo_max << ' ' << p_blobs << ' ' << dropout_target << ' '
     << dropout_band << ' ' << blob_r_min << ' ' << blob_r_max << ' '
     << p_specular << ' ' << specular_threshold << ' ' << p_erosion << ' '
     << erosion_radius << ' ' << p_gaussian << ' ' << noise_a << ' '
     << noise_b << ' ' << p_pixel_dropout << ' ' << pixel_dropout_rate << ' '
     << quantize_step << ' ' << dome_radius << ' ' << boundary_tau_rel << ' '
     << boundary_tau_abs << ' ' << min_instance_pixels;
  return fnv1a64(os.str());
}

std::uint16_t depth_to_mm(double meters) {
  const double mm = std::nearbyint(meters * 1000.0);
  if (mm <= 0.0) return 0;
  if (mm >= 65535.0) return 65535;
  return std::uint16_t(mm);
}

SceneSpec sample_randomization(std::uint64_t seed,
                               const GeneratorConfig& config) {
  config.validate();
  Rng rng(hash_combine(seed, 0x5ce9e5a3p1ULL));
  SceneSpec spec;
  spec.seed = seed;

  // Draw order is part of the generator version; do not reorder.
  spec.camera_pose.pan_deg = rng.uniform(config.pan_min_deg, config.pan_max_deg);
  spec.camera_pose.tilt_deg = rng.uniform(config.tilt_min_deg, config.tilt_max_deg);
  spec.camera_pose.roll_deg = rng.uniform(config.roll_min_deg, config.roll_max_deg);
  spec.camera_pose.azimuth_deg = rng.uniform(0.0, 360.0);
  spec.camera_pose.elevation_deg =
      rng.uniform(config.elevation_min_deg, config.elevation_max_deg);
  spec.camera_pose.distance = rng.uniform(config.distance_min, config.distance_max);

  spec.ambient = rng.uniform(config.ambient_min, config.ambient_max);
  const int n_lights = int(rng.uniform_int(config.min_lights, config.max_lights));
  for (int i = 0; i < n_lights; ++i) {
    PointLight l;
    const double az = rng.uniform(0.0, 2 * kPi);
    const double el = rng.uniform(deg2rad(20), deg2rad(80));
    const double r = rng.uniform(config.light_radius_min, config.light_radius_max);
    l.position = {r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az),
                  r * std::sin(el)};
    l.intensity = rng.uniform(config.light_intensity_min, config.light_intensity_max);
    spec.lights.push_back(l);
  }

  auto draw_albedo = [&] {
    return Vec3{rng.uniform(config.albedo_min, config.albedo_max),
                rng.uniform(config.albedo_min, config.albedo_max),
                rng.uniform(config.albedo_min, config.albedo_max)};
  };
  auto draw_texture = [&](Primitive& p) {
    p.texture_scale = rng.uniform(config.texture_scale_min, config.texture_scale_max);
    p.texture_amp = rng.uniform(config.texture_amp_min, config.texture_amp_max);
    p.texture_seed = rng.next_u64();
  };

  // Environment: textured ground disk and an enclosing dome, both id 0. They
  // guarantee every ray hits a surface within d_max.
  Primitive ground;
  ground.shape = Shape::Plane;
  ground.id = 0;
  ground.size = {config.dome_radius * 0.999, 0, 0};
  ground.albedo = draw_albedo();
  draw_texture(ground);
  spec.primitives.push_back(ground);

  Primitive dome;
  dome.shape = Shape::Sphere;
  dome.id = 0;
  dome.size = {config.dome_radius, 0, 0};
  dome.albedo = draw_albedo();
  draw_texture(dome);
  spec.primitives.push_back(dome);

  const int n_prims =
      int(rng.uniform_int(config.min_primitives, config.max_primitives));
  for (int i = 0; i < n_prims; ++i) {
    Primitive p;
    p.id = i + 1;
    const int s = int(rng.uniform_int(0, 2));
    p.shape = s == 0 ? Shape::Box : (s == 1 ? Shape::Sphere : Shape::Cylinder);
    const double pr = config.place_radius * std::sqrt(rng.uniform());
    const double pa = rng.uniform(0.0, 2 * kPi);
    const double a = rng.uniform(config.size_min, config.size_max);
    const double b = rng.uniform(config.size_min, config.size_max);
    const double c = rng.uniform(config.size_min, config.size_max);
    switch (p.shape) {
      case Shape::Box:
        p.size = {a / 2, b / 2, c / 2};
        break;
      case Shape::Sphere:
        p.size = {a / 2, 0, 0};
        break;
      case Shape::Cylinder:
        p.size = {a / 2, b / 2, 0};
        break;
      default:
        break;
    }
    const double lift = rng.uniform(0.0, 0.15);
    p.position = {pr * std::cos(pa), pr * std::sin(pa),
                  std::max({p.size.x, p.size.y, p.size.z}) + lift};
    p.rotation = {rng.uniform(0.0, 2 * kPi), rng.uniform(0.0, 2 * kPi),
                  rng.uniform(0.0, 2 * kPi)};
    p.albedo = draw_albedo();
    p.material = rng.bernoulli(config.glossy_prob) ? Material::Glossy
                                                   : Material::Matte;
    draw_texture(p);
    spec.primitives.push_back(p);
  }

  spec.dropout.blobs.enabled = rng.bernoulli(config.p_blobs);
  spec.dropout.blobs.target_fraction = config.dropout_target;
  spec.dropout.blobs.band_lo = std::max(0.0, config.dropout_target - config.dropout_band);
  spec.dropout.blobs.band_hi = std::min(1.0, config.dropout_target + config.dropout_band);
  spec.dropout.blobs.r_min = config.blob_r_min;
  spec.dropout.blobs.r_max = config.blob_r_max;
  spec.dropout.specular.enabled = rng.bernoulli(config.p_specular);
  spec.dropout.specular.threshold = config.specular_threshold;
  spec.dropout.erosion.enabled = rng.bernoulli(config.p_erosion);
  spec.dropout.erosion.radius = config.erosion_radius;
  spec.dropout.erosion.tau_rel = config.boundary_tau_rel;
  spec.dropout.erosion.tau_abs = config.boundary_tau_abs;

  spec.noise.gaussian = rng.bernoulli(config.p_gaussian);
  spec.noise.a = config.noise_a;
  spec.noise.b = config.noise_b;
  spec.noise.pixel_dropout = rng.bernoulli(config.p_pixel_dropout);
  spec.noise.dropout_rate = config.pixel_dropout_rate;
  spec.noise.quantize = true;
  spec.noise.step = config.quantize_step;
  return spec;
}

RenderResult render_scene(const SceneSpec& spec, const CameraModel& camera) {
  camera.require_valid();
  if (spec.primitives.empty())
    throw UsageError("render_scene: spec has no primitives");

  const CameraFrame cam = camera_frame(spec.camera_pose);

  struct LocalFrame {
    Mat3 rot;  // local-to-world
    Vec3 pos;
  };
  std::vector<LocalFrame> frames(spec.primitives.size());
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    frames[i].rot = Mat3::euler_xyz(spec.primitives[i].rotation);
    frames[i].pos = spec.primitives[i].position;
  }

  RenderResult out;
  out.color = ByteImage(camera.height, camera.width, 3);
  out.depth = DepthMap(camera.height, camera.width);
  out.instance_mask = ByteImage(camera.height, camera.width);
  out.glossy_highlight = FloatImage(camera.height, camera.width);

  bool any_foreground = false;
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 dir_cam{(x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy,
                         1.0};
      const Vec3 dir = cam.rot * dir_cam;

      Hit hit;
      for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const Vec3 o_l = frames[i].rot.transposed_mul(cam.origin - frames[i].pos);
        const Vec3 d_l = frames[i].rot.transposed_mul(dir);
        double t;
        Vec3 nl;
        if (intersect_local(spec.primitives[i], o_l, d_l, kNearClip, t, nl) &&
            t < hit.t) {
          hit.t = t;
          hit.prim = int(i);
          hit.point_local = o_l + d_l * t;
          hit.normal_world = frames[i].rot * nl;
        }
      }
      if (hit.prim < 0) continue;

      const Primitive& pr = spec.primitives[hit.prim];
      Vec3 n = hit.normal_world;
      if (n.dot(dir) > 0) n = -n;  // two-sided
      const Vec3 p_world = cam.origin + dir * hit.t;

      double diffuse = 0.0;
      double highlight = 0.0;
      for (const auto& l : spec.lights) {
        const Vec3 lv = (l.position - p_world).normalized();
        const double lam = std::max(0.0, n.dot(lv)) * l.intensity;
        diffuse += lam;
        highlight = std::max(highlight, lam);
      }
      const double tex = texture_factor(pr, hit.point_local);
      const double rgb[3] = {pr.albedo.x, pr.albedo.y, pr.albedo.z};
      for (int c = 0; c < 3; ++c) {
        const double v = diffuse * rgb[c] * tex + spec.ambient;
        const double b = std::nearbyint(v * 255.0);
        out.color.at(y, x, c) =
            std::uint8_t(std::clamp(b, 0.0, 255.0));
      }
      out.depth.at(y, x) = hit.t;
      out.instance_mask.at(y, x) = std::uint8_t(pr.id);
      if (pr.id > 0) any_foreground = true;
      if (pr.material == Material::Glossy)
        out.glossy_highlight.at(y, x) = float(highlight);
    }
  }
  if (!any_foreground)
    throw GenerationError("render_scene: no foreground primitive visible");
  return out;
}

namespace {

// Pixels whose depth jumps more than max(tau_abs, tau_rel * d) to a
// 4-neighbor, dilated by radius: mimics sensor failure at occlusions.
void erode_discontinuities(const DepthMap& gt, const EdgeErosion& e,
                           std::vector<std::uint8_t>& missing) {
  const int h = gt.h, w = gt.w;
  std::vector<std::uint8_t> edge(std::size_t(h) * w, 0);
  static constexpr int kDy[4] = {-1, 1, 0, 0};
  static constexpr int kDx[4] = {0, 0, -1, 1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = gt.at(y, x);
      if (d == 0) continue;
      const double thr = std::max(e.tau_abs, e.tau_rel * d);
      for (int k = 0; k < 4; ++k) {
        const int ny = y + kDy[k], nx = x + kDx[k];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const double dn = gt.at(ny, nx);
        if (dn != 0 && std::abs(dn - d) > thr) {
          edge[std::size_t(y) * w + x] = 1;
          break;
        }
      }
    }
  const int r = e.radius;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!edge[std::size_t(y) * w + x]) continue;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          missing[std::size_t(ny) * w + nx] = 1;
        }
    }
}

}  // namespace

DepthMap corrupt_depth(const DepthMap& depth_gt, const SceneSpec& spec,
                       const FloatImage& glossy_highlight) {
  DepthMap out = depth_gt;
  if (spec.dropout.empty() && spec.noise.empty()) return out;

  const int h = out.h, w = out.w;
  const std::size_t n = out.size();
  Rng rng(hash_combine(spec.seed, 0xC0FFEEULL));
  std::vector<std::uint8_t> missing(n, 0);

  if (spec.dropout.specular.enabled) {
    float hmax = 0;
    for (std::size_t i = 0; i < n; ++i)
      hmax = std::max(hmax, glossy_highlight.v.empty() ? 0.f : glossy_highlight.v[i]);
    if (hmax > 0) {
      const float thr = float(spec.dropout.specular.threshold) * hmax;
      for (std::size_t i = 0; i < n; ++i)
        if (glossy_highlight.v[i] >= thr && glossy_highlight.v[i] > 0)
          missing[i] = 1;
    }
  }

  if (spec.dropout.erosion.enabled)
    erode_discontinuities(depth_gt, spec.dropout.erosion, missing);

  if (spec.dropout.blobs.enabled) {
    const auto& bl = spec.dropout.blobs;
    auto frac = [&] {
      std::size_t c = 0;
      for (std::size_t i = 0; i < n; ++i) c += missing[i];
      return double(c) / double(n);
    };
    int guard = 0;
    while (frac() < bl.target_fraction && guard++ < 4096) {
      const double cx = rng.uniform(0.0, w);
      const double cy = rng.uniform(0.0, h);
      const double r1 = rng.uniform(bl.r_min, bl.r_max);
      const double r2 = rng.uniform(bl.r_min, bl.r_max);
      const double phi = rng.uniform(0.0, kPi);
      const double cp = std::cos(phi), sp = std::sin(phi);
      const int y0 = std::max(0, int(cy - bl.r_max - 1));
      const int y1 = std::min(h - 1, int(cy + bl.r_max + 1));
      const int x0 = std::max(0, int(cx - bl.r_max - 1));
      const int x1 = std::min(w - 1, int(cx + bl.r_max + 1));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dx = x - cx, dy = y - cy;
          const double u = (dx * cp + dy * sp) / r1;
          const double v = (-dx * sp + dy * cp) / r2;
          if (u * u + v * v <= 1.0) missing[std::size_t(y) * w + x] = 1;
        }
    }
  }

  if (spec.noise.gaussian) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = out.m[i];
      const double eps = rng.normal(0.0, spec.noise.a + spec.noise.b * d * d);
      if (d == 0 || missing[i]) continue;  // draw happens above for stream stability
      out.m[i] = std::clamp(d + eps, 0.101, 65.0);
    }
  }

  if (spec.noise.pixel_dropout) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool drop = rng.bernoulli(spec.noise.dropout_rate);
      if (drop && out.m[i] != 0) missing[i] = 1;
    }
  }

  if (spec.noise.quantize && spec.noise.step > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (out.m[i] == 0 || missing[i]) continue;
      const double q = std::nearbyint(out.m[i] / spec.noise.step);
      out.m[i] = std::max(1.0, q) * spec.noise.step;
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    if (missing[i]) out.m[i] = 0.0;
  return out;
}

Labels derive_labels(const DepthMap& depth_gt, ByteImage& instance_mask,
                     const CameraModel& camera, double d_max, double tau_rel,
                     double tau_abs, int min_pixels) {
  if (depth_gt.h != instance_mask.h || depth_gt.w != instance_mask.w)
    throw UsageError("derive_labels: size mismatch");
  const int h = depth_gt.h, w = depth_gt.w;

  std::map<int, std::vector<std::pair<int, int>>> pixels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int id = instance_mask.at(y, x);
      if (id != 0) pixels[id].emplace_back(y, x);
    }

  Labels labels;
  for (auto& [id, px] : pixels) {
    if (int(px.size()) < min_pixels) {
      for (auto [y, x] : px) instance_mask.at(y, x) = 0;
      continue;
    }
    InstanceCenter c;
    c.id = id;
    double sx = 0, sy = 0;
    std::vector<double> depths;
    depths.reserve(px.size());
    for (auto [y, x] : px) {
      sx += x;
      sy += y;
      depths.push_back(depth_gt.at(y, x));
    }
    c.cx = sx / double(px.size());
    c.cy = sy / double(px.size());
    std::sort(depths.begin(), depths.end());
    const std::size_t m = depths.size();
    c.zc = (m % 2 == 1) ? depths[m / 2]
                        : 0.5 * (depths[m / 2 - 1] + depths[m / 2]);
    labels.centers.push_back(c);
  }

  labels.boundary = boundary_from_depth(depth_gt, instance_mask, tau_rel, tau_abs);

  const NormalMap nm = normals_from_depth(depth_gt, camera);
  labels.normals = FloatImage(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!nm.is_valid(y, x)) continue;
      const Vec3 nv = nm.normal(y, x);
      labels.normals.at(y, x, 0) = float(nv.x);
      labels.normals.at(y, x, 1) = float(nv.y);
      labels.normals.at(y, x, 2) = float(nv.z);
    }

  const CenterField cf = center_field(instance_mask, labels.centers, d_max);
  labels.center_field = FloatImage(h, w, 3);
  for (std::size_t i = 0; i < cf.f.size(); ++i)
    labels.center_field.v[i] = float(cf.f[i]);
  return labels;
}

SceneSample generate_sample(std::uint64_t seed, const GeneratorConfig& config) {
  config.validate();
  const CameraModel camera = config.camera();
  for (int attempt = 0; attempt < 16; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : hash_combine(seed, 0xA77E000ULL + attempt);
    SceneSpec spec = sample_randomization(s, config);
    RenderResult render;
    try {
      render = render_scene(spec, camera);
    } catch (const GenerationError&) {
      continue;
    }
    // Snap ground truth to the storage grid so that write/read is identity.
    for (auto& d : render.depth.m)
      if (d != 0) d = double(depth_to_mm(d)) / 1000.0;

    SceneSample sample;
    sample.depth_gt = render.depth;
    sample.depth_raw = corrupt_depth(render.depth, spec, render.glossy_highlight);
    for (auto& d : sample.depth_raw.m)
      if (d != 0) d = double(depth_to_mm(d)) / 1000.0;
    sample.color = std::move(render.color);
    sample.instance_mask = std::move(render.instance_mask);
    sample.labels = derive_labels(sample.depth_gt, sample.instance_mask, camera,
                                  config.d_max, config.boundary_tau_rel,
                                  config.boundary_tau_abs,
                                  config.min_instance_pixels);
    sample.camera = camera;
    sample.spec = std::move(spec);
    sample.config_hash = config.hash();
    return sample;
  }
  throw DataError("generate_sample: no visible foreground after 16 attempts");
}

}  // namespace sgdepth
