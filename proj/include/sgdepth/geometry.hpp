#pragma once

#include <vector>

#include "sgdepth/types.hpp"

namespace sgdepth {

// Camera-frame 3D points, one per pixel. For a valid pixel the z component
// equals the depth and (x, y) follow the pinhole model:
//   x = (u - cx) * z / fx,  y = (v - cy) * z / fy.
struct PointMap {
  int h = 0, w = 0;
  std::vector<double> xyz;           // 3 per pixel
  std::vector<std::uint8_t> valid;

  PointMap() = default;
  PointMap(int height, int width)
      : h(height),
        w(width),
        xyz(std::size_t(height) * width * 3, 0.0),
        valid(std::size_t(height) * width, 0) {}

  Vec3 point(int y, int x) const {
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    return {xyz[i], xyz[i + 1], xyz[i + 2]};
  }
  void set_point(int y, int x, const Vec3& p) {
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    xyz[i] = p.x;
    xyz[i + 1] = p.y;
    xyz[i + 2] = p.z;
  }
  bool is_valid(int y, int x) const { return valid[std::size_t(y) * w + x] != 0; }
};

// Unit surface normals oriented toward the camera (n_z < 0 in camera frame).
struct NormalMap {
  int h = 0, w = 0;
  std::vector<double> n;             // 3 per pixel
  std::vector<std::uint8_t> valid;

  NormalMap() = default;
  NormalMap(int height, int width)
      : h(height),
        w(width),
        n(std::size_t(height) * width * 3, 0.0),
        valid(std::size_t(height) * width, 0) {}

  Vec3 normal(int y, int x) const {
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    return {n[i], n[i + 1], n[i + 2]};
  }
  void set_normal(int y, int x, const Vec3& v) {
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    n[i] = v.x;
    n[i + 1] = v.y;
    n[i + 2] = v.z;
  }
  bool is_valid(int y, int x) const { return valid[std::size_t(y) * w + x] != 0; }
};

struct InstanceCenter {
  int id = 0;
  double cx = 0.0, cy = 0.0;  // pixel coordinates of the mask centroid
  double zc = 0.0;            // median instance depth, meters
};

// Per-pixel (v_x, v_y, t_z): unit vector from the pixel toward its instance
// center plus the normalized instance distance z_c / d_max. Zero off-instance
// and, by convention, (0, 0) at the exact center pixel.
struct CenterField {
  int h = 0, w = 0;
  std::vector<double> f;             // 3 per pixel
  std::vector<std::uint8_t> on_instance;

  CenterField() = default;
  CenterField(int height, int width)
      : h(height),
        w(width),
        f(std::size_t(height) * width * 3, 0.0),
        on_instance(std::size_t(height) * width, 0) {}

  Vec3 value(int y, int x) const {
    const std::size_t i = (std::size_t(y) * w + x) * 3;
    return {f[i], f[i + 1], f[i + 2]};
  }
};

PointMap backproject(const DepthMap& depth, const CameraModel& camera);

// Central-difference tangents of the point map, crossed and flipped so the
// normal faces the camera. Invalid wherever any stencil pixel is missing.
NormalMap normals_from_depth(const DepthMap& depth, const CameraModel& camera);

// V(p,q) = point(q) - point(p) for every valid q != p in the
// (2*radius+1)^2 window clipped to the image. Empty if p is invalid.
std::vector<Vec3> neighbor_vectors(const PointMap& points, int y, int x,
                                   int radius);

CenterField center_field(const ByteImage& instance_mask,
                         const std::vector<InstanceCenter>& centers,
                         double d_max);

// A pixel is boundary iff its depth jumps by more than
// max(tau_abs, tau_rel * depth) toward a 4-neighbor, or a 4-neighbor carries
// a different instance id. Only valid pixels are marked.
ByteImage boundary_from_depth(const DepthMap& depth_gt,
                              const ByteImage& instance_mask, double tau_rel,
                              double tau_abs);

}  // namespace sgdepth
