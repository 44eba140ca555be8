#include "sgdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sgdepth {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n == 0.0) return {0.0, 0.0, 0.0};
  return {x / n, y / n, z / n};
}

PointMap backproject(const DepthMap& depth, const CameraModel& camera) {
  camera.require_valid();
  PointMap pm(depth.h, depth.w);
  for (int y = 0; y < depth.h; ++y) {
    for (int x = 0; x < depth.w; ++x) {
      const double z = depth.at(y, x);
      if (z == 0.0) continue;
      pm.set_point(y, x,
                   {(x - camera.cx) * z / camera.fx,
                    (y - camera.cy) * z / camera.fy, z});
      pm.valid[std::size_t(y) * depth.w + x] = 1;
    }
  }
  return pm;
}

NormalMap normals_from_depth(const DepthMap& depth, const CameraModel& camera) {
  const PointMap pm = backproject(depth, camera);
  NormalMap nm(depth.h, depth.w);
  for (int y = 1; y + 1 < depth.h; ++y) {
    for (int x = 1; x + 1 < depth.w; ++x) {
      if (!pm.is_valid(y, x) || !pm.is_valid(y, x - 1) ||
          !pm.is_valid(y, x + 1) || !pm.is_valid(y - 1, x) ||
          !pm.is_valid(y + 1, x)) {
        continue;
      }
      const Vec3 tu = pm.point(y, x + 1) - pm.point(y, x - 1);
      const Vec3 tv = pm.point(y + 1, x) - pm.point(y - 1, x);
      Vec3 n = tu.cross(tv);
      const double len = n.norm();
      if (len == 0.0) continue;
      n = n * (1.0 / len);
      if (n.z > 0.0) n = -n;
      nm.set_normal(y, x, n);
      nm.valid[std::size_t(y) * depth.w + x] = 1;
    }
  }
  return nm;
}

std::vector<Vec3> neighbor_vectors(const PointMap& points, int y, int x,
                                   int radius) {
  std::vector<Vec3> out;
  if (y < 0 || y >= points.h || x < 0 || x >= points.w) return out;
  if (!points.is_valid(y, x)) return out;
  const Vec3 p = points.point(y, x);
  for (int qy = std::max(0, y - radius); qy <= std::min(points.h - 1, y + radius); ++qy) {
    for (int qx = std::max(0, x - radius); qx <= std::min(points.w - 1, x + radius); ++qx) {
      if (qy == y && qx == x) continue;
      if (!points.is_valid(qy, qx)) continue;
      out.push_back(points.point(qy, qx) - p);
    }
  }
  return out;
}

CenterField center_field(const ByteImage& instance_mask,
                         const std::vector<InstanceCenter>& centers,
                         double d_max) {
  if (d_max <= 0.0) throw UsageError("center_field: d_max must be positive");
  std::map<int, const InstanceCenter*> by_id;
  for (const auto& c : centers) by_id[c.id] = &c;

  CenterField cf(instance_mask.h, instance_mask.w);
  for (int y = 0; y < instance_mask.h; ++y) {
    for (int x = 0; x < instance_mask.w; ++x) {
      const int id = instance_mask.at(y, x);
      if (id == 0) continue;
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw DataError("center_field: instance id " + std::to_string(id) +
                        " has no center entry");
      }
      const InstanceCenter& c = *it->second;
      const double dx = x - c.cx;
      const double dy = y - c.cy;
      const double len = std::sqrt(dx * dx + dy * dy);
      const std::size_t i = (std::size_t(y) * instance_mask.w + x) * 3;
      if (len > 0.0) {
        cf.f[i] = dx / len;
        cf.f[i + 1] = dy / len;
      }
      cf.f[i + 2] = c.zc / d_max;
      cf.on_instance[std::size_t(y) * instance_mask.w + x] = 1;
    }
  }
  return cf;
}

ByteImage boundary_from_depth(const DepthMap& depth_gt,
                              const ByteImage& instance_mask, double tau_rel,
                              double tau_abs) {
  if (depth_gt.h != instance_mask.h || depth_gt.w != instance_mask.w)
    throw UsageError("boundary_from_depth: size mismatch");
  ByteImage b(depth_gt.h, depth_gt.w);
  static constexpr int kDy[4] = {-1, 1, 0, 0};
  static constexpr int kDx[4] = {0, 0, -1, 1};
  for (int y = 0; y < depth_gt.h; ++y) {
    for (int x = 0; x < depth_gt.w; ++x) {
      const double d = depth_gt.at(y, x);
      if (d == 0.0) continue;
      const double thresh = std::max(tau_abs, tau_rel * d);
      bool mark = false;
      for (int k = 0; k < 4 && !mark; ++k) {
        const int ny = y + kDy[k];
        const int nx = x + kDx[k];
        if (ny < 0 || ny >= depth_gt.h || nx < 0 || nx >= depth_gt.w) continue;
        if (instance_mask.at(ny, nx) != instance_mask.at(y, x)) mark = true;
        const double dn = depth_gt.at(ny, nx);
        if (dn != 0.0 && std::abs(dn - d) > thresh) mark = true;
      }
      if (mark) b.at(y, x) = 1;
    }
  }
  return b;
}

}  // namespace sgdepth
