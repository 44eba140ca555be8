#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdepth/geometry.hpp"
#include "sgdepth/types.hpp"

namespace sgdepth {

enum class Shape : int { Box = 0, Sphere = 1, Cylinder = 2, Plane = 3 };
enum class Material : int { Matte = 0, Glossy = 1 };

// One posed primitive. size is shape-dependent: box half-extents (x,y,z),
// sphere radius in x, cylinder (radius, half-height) in (x,y); planes are
// infinite and ignore size. id 0 marks environment surfaces (ground, dome).
struct Primitive {
  Shape shape = Shape::Sphere;
  int id = 0;
  Vec3 position;
  Vec3 rotation;  // intrinsic XYZ Euler angles, radians
  Vec3 size{0.1, 0.1, 0.1};
  Vec3 albedo{0.5, 0.5, 0.5};
  Material material = Material::Matte;
  double texture_scale = 4.0;
  double texture_amp = 0.25;
  std::uint64_t texture_seed = 0;
};

struct PointLight {
  Vec3 position;
  double intensity = 1.0;
};

struct CameraPose {
  double pan_deg = 0.0, tilt_deg = 0.0, roll_deg = 0.0;
  double azimuth_deg = 0.0;
  double elevation_deg = 15.0;
  double distance = 2.0;
};

struct BlobDropout {
  bool enabled = false;
  double target_fraction = 0.2;  // blobs are added until total missing >= this
  double band_lo = 0.15, band_hi = 0.25;
  double r_min = 2.0, r_max = 8.0;  // ellipse semi-axes, pixels
};

struct SpecularDropout {
  bool enabled = false;
  double threshold = 0.85;  // fraction of the per-image glossy highlight max
};

struct EdgeErosion {
  bool enabled = false;
  int radius = 1;
  double tau_rel = 0.05, tau_abs = 0.03;
};

struct DropoutSpec {
  BlobDropout blobs;
  SpecularDropout specular;
  EdgeErosion erosion;
  bool empty() const {
    return !blobs.enabled && !specular.enabled && !erosion.enabled;
  }
};

struct NoiseSpec {
  bool gaussian = false;
  double a = 0.0, b = 0.0;  // sigma(d) = a + b * d^2
  bool pixel_dropout = false;
  double dropout_rate = 0.0;
  bool quantize = false;
  double step = 0.001;  // storage step, meters
  bool empty() const { return !gaussian && !pixel_dropout && !quantize; }
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<Primitive> primitives;
  std::vector<PointLight> lights;
  double ambient = 0.2;
  CameraPose camera_pose;
  DropoutSpec dropout;
  NoiseSpec noise;
};

// Ranges and counts for the six randomization axes plus the fixed camera
// intrinsics and scene dressing. Pure data; hash() pins provenance in meta.
struct GeneratorConfig {
  int width = 64, height = 64;
  double focal_factor = 1.0;  // fx = fy = focal_factor * width
  double d_max = 10.0;

  // (1) surface textures (procedural value noise)
  double texture_amp_min = 0.1, texture_amp_max = 0.4;
  double texture_scale_min = 2.0, texture_scale_max = 8.0;

  // (2) lights
  int min_lights = 1, max_lights = 3;
  double light_intensity_min = 0.4, light_intensity_max = 1.2;
  double light_radius_min = 2.0, light_radius_max = 5.0;
  double ambient_min = 0.1, ambient_max = 0.3;

  // (3) camera pose
  double pan_min_deg = -30.0, pan_max_deg = 30.0;
  double tilt_min_deg = -30.0, tilt_max_deg = 30.0;
  double roll_min_deg = -30.0, roll_max_deg = 30.0;
  double elevation_min_deg = 5.0, elevation_max_deg = 30.0;
  double distance_min = 1.6, distance_max = 3.2;

  // (4) objects: materials, colors, shapes, placement
  int min_primitives = 3, max_primitives = 7;
  double size_min = 0.10, size_max = 0.38;
  double place_radius = 0.8;
  double glossy_prob = 0.35;
  double albedo_min = 0.1, albedo_max = 0.9;

  // (5) depth missing regions
  double p_blobs = 1.0;
  double dropout_target = 0.2;
  double dropout_band = 0.05;
  double blob_r_min = 2.0, blob_r_max = 8.0;
  double p_specular = 1.0;
  double specular_threshold = 0.85;
  double p_erosion = 1.0;
  int erosion_radius = 1;

  // (6) sensor noise
  double p_gaussian = 1.0;
  double noise_a = 0.004, noise_b = 0.002;
  double p_pixel_dropout = 0.5;
  double pixel_dropout_rate = 0.005;
  double quantize_step = 0.001;

  // scene dressing (not randomized)
  double dome_radius = 6.0;
  double boundary_tau_rel = 0.05, boundary_tau_abs = 0.03;
  int min_instance_pixels = 4;

  void validate() const;
  std::uint64_t hash() const;
  CameraModel camera() const;
};

struct Labels {
  ByteImage boundary;               // {0,1}
  FloatImage normals;               // 3ch, (0,0,0) where invalid
  std::vector<InstanceCenter> centers;
  FloatImage center_field;          // 3ch (v_x, v_y, t_z)
};

struct SceneSample {
  ByteImage color;        // 3ch RGB
  DepthMap depth_raw;     // post-corruption, 0 = missing
  DepthMap depth_gt;
  ByteImage instance_mask;
  Labels labels;
  CameraModel camera;
  SceneSpec spec;
  std::uint64_t config_hash = 0;
};

struct RenderResult {
  ByteImage color;
  DepthMap depth;
  ByteImage instance_mask;
  // max_l(n.l * intensity) on glossy surfaces, 0 elsewhere; drives specular
  // dropout in corrupt_depth.
  FloatImage glossy_highlight;
};

// Deterministic pure function of (seed, config); populates all six
// randomization axes.
SceneSpec sample_randomization(std::uint64_t seed, const GeneratorConfig& config);

// Analytic ray casting against the primitive list. Nearest hit wins; depth is
// the camera-frame z of the hit (rays carry unit z slope). Pixels missed by
// every primitive get depth 0 and id 0; specs built by sample_randomization
// enclose the scene so that cannot happen. Throws GenerationError when no
// foreground primitive is visible at all.
RenderResult render_scene(const SceneSpec& spec, const CameraModel& camera);

// Applies the missing-region generators then the noise generators from the
// spec. A spec with both lists empty returns depth_gt unchanged.
DepthMap corrupt_depth(const DepthMap& depth_gt, const SceneSpec& spec,
                       const FloatImage& glossy_highlight);

// Centroids and median depths per instance plus the derived dense labels.
// Instances smaller than min_pixels are dropped and zeroed in the mask.
Labels derive_labels(const DepthMap& depth_gt, ByteImage& instance_mask,
                     const CameraModel& camera, double d_max, double tau_rel,
                     double tau_abs, int min_pixels);

// Full pipeline for one sample; retries deterministically on empty frustum.
SceneSample generate_sample(std::uint64_t seed, const GeneratorConfig& config);

// Round-half-to-even quantization to millimeters used by the storage format.
std::uint16_t depth_to_mm(double meters);

}  // namespace sgdepth
