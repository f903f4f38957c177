#pragma once

#include "adgs/optimizer.hpp"
#include "adgs/scene.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace adgs {

struct ColoredPoint {
    Vec3 position;
    Vec3 color;  // [0,1]
};

struct SceneView {
    Camera camera;
    std::string image_path;  // relative to the scene directory
    std::string depth_path;  // optional
    std::optional<bool> is_test;  // explicit split from the manifest, if any
};

struct SceneDataset {
    std::vector<Camera> train_cameras;
    std::vector<Image> train_images;
    std::vector<Camera> test_cameras;
    std::vector<Image> test_images;
    std::vector<DepthMap> test_depths;  // empty when the scene has no reference depth
    std::vector<ColoredPoint> points;
    Vec3 background = Vec3::Zero();
    double scene_extent = 1.0;
};

/// Radius of the bounding sphere of the camera centers.
double camera_extent(const std::vector<Camera>& cams);

/// Loads a scene directory (manifest.json + images). Without explicit splits
/// in the manifest, every 8th frame in manifest order becomes a test view.
SceneDataset load_scene(const std::string& dir);

/// Writes a scene directory in the same layout load_scene expects.
void save_scene(const std::string& dir, const std::vector<SceneView>& views,
                const std::vector<Image>& images, const std::vector<DepthMap>& depths,
                const std::vector<ColoredPoint>& points, const Vec3& background);

/// Point cloud when available (isotropic k-NN scales, opacity 0.1, degree-0 SH
/// from point color); otherwise 1000 Gaussians uniform in the frustum box.
GaussianCloud init_cloud(const SceneDataset& dataset, std::mt19937_64& rng, int sh_degree = 0);

// PLY point clouds (positions + RGB), ASCII or binary_little_endian.
std::vector<ColoredPoint> read_ply(const std::string& path);
void write_ply(const std::string& path, const std::vector<ColoredPoint>& points);

// Versioned binary checkpoints: float32 parameters, float64 moment buffers.
void save_checkpoint(const std::string& path, const GaussianCloud& cloud,
                     const OptimizerState& opt, int iteration);
struct Checkpoint {
    GaussianCloud cloud;
    OptimizerState opt;
    int iteration = 0;
};
Checkpoint load_checkpoint(const std::string& path);
/// Byte size of a checkpoint holding `count` Gaussians at `sh_degree`.
size_t checkpoint_byte_size(int count, int sh_degree);

/// Synthetic scene generation; ground truth rendered by the engine itself so
/// images and depths are exact. Writes a scene directory and returns it loaded.
SceneDataset synth_scene(const std::string& preset, std::mt19937_64& rng, const std::string& out_dir);

}  // namespace adgs
