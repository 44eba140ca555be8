#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdepth {

// Error taxonomy maps onto CLI exit codes: usage 1, data 2, numeric 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// No foreground primitive visible; the caller may resample with a new seed.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const;
  Vec3 normalized() const;
};

struct CameraModel {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
           cx < width && cy >= 0.0 && cy < height;
  }
  void require_valid() const {
    if (!valid()) throw UsageError("invalid camera model");
  }
};

// Dense single-channel depth in meters; 0 encodes a missing measurement.
struct DepthMap {
  int h = 0, w = 0;
  std::vector<double> m;

  DepthMap() = default;
  DepthMap(int height, int width)
      : h(height), w(width), m(std::size_t(height) * width, 0.0) {}

  double& at(int y, int x) { return m[std::size_t(y) * w + x]; }
  double at(int y, int x) const { return m[std::size_t(y) * w + x]; }
  bool missing(int y, int x) const { return at(y, x) == 0.0; }
  std::size_t size() const { return m.size(); }
  bool same_shape(const DepthMap& o) const { return h == o.h && w == o.w; }
};

template <typename T>
struct Image {
  int h = 0, w = 0, ch = 1;
  std::vector<T> v;

  Image() = default;
  Image(int height, int width, int channels = 1)
      : h(height),
        w(width),
        ch(channels),
        v(std::size_t(height) * width * channels, T{}) {}

  T& at(int y, int x, int c = 0) {
    return v[(std::size_t(y) * w + x) * ch + c];
  }
  T at(int y, int x, int c = 0) const {
    return v[(std::size_t(y) * w + x) * ch + c];
  }
  std::size_t size() const { return v.size(); }
};

using ByteImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

}  // namespace sgdepth
