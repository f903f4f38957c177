#include "adgs/dataio.hpp"

#include "adgs/density.hpp"
#include "adgs/image_io.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace adgs;
using namespace adgs::test;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<SceneView> grid_views(int n, int size = 8) {
    std::vector<SceneView> views;
    for (int i = 0; i < n; ++i) {
        SceneView v;
        v.camera = test_camera(size, 10.0);
        v.camera.translation = Vec3(0.1 * i, 0.0, 0.0);
        v.image_path = "images/view_" + std::to_string(i) + ".pfm";
        views.push_back(v);
    }
    return views;
}

Image checker(int size, int phase) {
    Image img(size, size);
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            const double v = ((r + c + phase) % 2) ? 0.75 : 0.25;
            img.set_pixel(r, c, Vec3(v, 1.0 - v, 0.5 * v));
        }
    return img;
}

std::vector<double> read_all_bytes_hash(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<double> out(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i];
    return out;
}

}  // namespace

TEST_CASE("camera_extent is the bounding-sphere radius of the centers") {
    std::vector<Camera> cams(2, test_camera());
    cams[0].translation = Vec3(-1, 0, 0);  // identity rotation: center = -t
    cams[1].translation = Vec3(1, 0, 0);
    CHECK(camera_extent(cams) == doctest::Approx(1.0).epsilon(1e-12));
    cams.push_back(test_camera());  // center at the origin: centroid unchanged
    CHECK(camera_extent(cams) == doctest::Approx(1.0).epsilon(1e-12));
    cams[2].translation = Vec3(-3, 0, 0);  // centroid (1,0,0), farthest at x=3
    CHECK(camera_extent(cams) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(camera_extent({test_camera()}) == 1e-6);  // degenerate floor
    CHECK(camera_extent({}) == 1.0);
}

TEST_CASE("scene round-trip through save_scene / load_scene") {
    TempDir dir("adgs_test_scene_rt");
    const int n = 16, size = 8;
    std::vector<SceneView> views = grid_views(n, size);
    std::vector<Image> images;
    std::vector<DepthMap> depths;
    for (int i = 0; i < n; ++i) images.push_back(checker(size, i));
    std::vector<ColoredPoint> points = {{Vec3(0, 0, 2), Vec3(1, 0, 0)},
                                        {Vec3(0.1, 0, 2), Vec3(0, 1, 0)},
                                        {Vec3(0, 0.1, 2.2), Vec3(0, 0, 1)}};

    SUBCASE("default split: every 8th view is a test view") {
        save_scene(dir.path.string(), views, images, depths, points, Vec3(0.1, 0.2, 0.3));
        const SceneDataset ds = load_scene(dir.path.string());
        CHECK(ds.test_cameras.size() == 2);  // indices 0 and 8
        CHECK(ds.train_cameras.size() == 14);
        CHECK(ds.points.size() == 3);
        CHECK(ds.background.isApprox(Vec3(0.1, 0.2, 0.3), 1e-12));
        CHECK(ds.test_depths.empty());
        // PFM images are float32-exact for float32-representable values.
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c)
                CHECK((ds.test_images[0].pixel(r, c) - images[0].pixel(r, c)).norm() == 0.0);
        // Index 1 is the first train view.
        CHECK((ds.train_images[0].pixel(0, 0) - images[1].pixel(0, 0)).norm() == 0.0);
        CHECK(ds.scene_extent == doctest::Approx(0.75).epsilon(1e-12));
    }

    SUBCASE("explicit split overrides the every-8th rule") {
        for (int i = 0; i < n; ++i) views[i].is_test = (i % 4 == 3);
        save_scene(dir.path.string(), views, images, depths, points, Vec3::Zero());
        const SceneDataset ds = load_scene(dir.path.string());
        CHECK(ds.test_cameras.size() == 4);
        CHECK(ds.train_cameras.size() == 12);
        // View 0 is train under the explicit split even though 0 % 8 == 0.
        CHECK((ds.train_images[0].pixel(0, 0) - images[0].pixel(0, 0)).norm() == 0.0);
    }

    SUBCASE("reference depths round-trip when test views carry them") {
        for (int i = 0; i < n; ++i) {
            views[i].depth_path = "depths/view_" + std::to_string(i) + ".pfm";
            DepthMap d = DepthMap::Constant(size, size, 2.0 + 0.125 * i);
            depths.push_back(d);
        }
        save_scene(dir.path.string(), views, images, depths, points, Vec3::Zero());
        const SceneDataset ds = load_scene(dir.path.string());
        REQUIRE(ds.test_depths.size() == 2);
        CHECK(ds.test_depths[1](3, 3) == 3.0);  // view 8: 2 + 0.125 * 8
    }
}

TEST_CASE("load_scene rejects bad manifests with the camera index in the message") {
    TempDir dir("adgs_test_scene_bad");
    std::vector<SceneView> views = grid_views(3);
    std::vector<Image> images = {checker(8, 0), checker(8, 1), checker(8, 2)};
    save_scene(dir.path.string(), views, images, {}, {}, Vec3::Zero());

    // Corrupt camera 1's rotation into a non-orthonormal matrix.
    {
        std::ifstream in2(dir.path / "manifest.json");
        nlohmann::json j = nlohmann::json::parse(in2);
        j["cameras"][1]["w2c"][0][0] = 2.0;
        std::ofstream out(dir.path / "manifest.json");
        out << j.dump(2);
    }
    CHECK_THROWS_WITH_AS(load_scene(dir.path.string()),
                         doctest::Contains("camera 1"), std::runtime_error);

    // Missing field is named too.
    {
        std::ifstream in2(dir.path / "manifest.json");
        nlohmann::json j = nlohmann::json::parse(in2);
        j["cameras"][1]["w2c"][0][0] = 1.0;
        j["cameras"][2].erase("fx");
        std::ofstream out(dir.path / "manifest.json");
        out << j.dump(2);
    }
    CHECK_THROWS_WITH_AS(load_scene(dir.path.string()), doctest::Contains("camera 2"),
                         std::runtime_error);
    CHECK_THROWS_AS(load_scene((dir.path / "nope").string()), std::runtime_error);
}

TEST_CASE("init_cloud from points: scales, opacity, colors") {
    SceneDataset ds;
    std::mt19937_64 rng(31);

    SUBCASE("two points use each other as the only neighbour") {
        ds.points = {{Vec3(0, 0, 2), Vec3(1, 1, 1)}, {Vec3(0.5, 0, 2), Vec3(0, 0, 0)}};
        const GaussianCloud cloud = init_cloud(ds, rng);
        REQUIRE(cloud.size() == 2);
        for (const auto& g : cloud.gaussians) {
            CHECK(g.scale().x() == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(g.opacity() == doctest::Approx(0.1).epsilon(1e-12));
        }
        // Degree-0 color: clamp(c0 * sh0 + 0.5) reproduces the point color.
        CHECK(eval_sh_color(cloud.gaussians[0].sh, Vec3(0, 0, 1)).isApprox(Vec3(1, 1, 1), 1e-9));
        CHECK(eval_sh_color(cloud.gaussians[1].sh, Vec3(0, 0, 1)).norm() < 1e-9);
    }

    SUBCASE("k-NN scale matches a quadratic oracle on 50 random points") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 50; ++i)
            ds.points.push_back({Vec3(u(rng), u(rng), u(rng) + 2.0),
                                 Vec3(u(rng), u(rng), u(rng))});
        const GaussianCloud cloud = init_cloud(ds, rng);
        REQUIRE(cloud.size() == 50);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> dist;
            for (int jx = 0; jx < 50; ++jx)
                if (jx != i)
                    dist.push_back((ds.points[jx].position - ds.points[i].position).norm());
            std::sort(dist.begin(), dist.end());
            const double want = (dist[0] + dist[1] + dist[2]) / 3.0;
            CHECK(rel_err(cloud.gaussians[i].scale().x(), want) < 1e-12);
        }
    }

    SUBCASE("no points falls back to 1000 random Gaussians in the look-at box") {
        ds.train_cameras = {test_camera()};
        ds.scene_extent = 1.0;
        const GaussianCloud cloud = init_cloud(ds, rng);
        CHECK(cloud.size() == 1000);
        for (const auto& g : cloud.gaussians) {
            CHECK(g.mu.z() >= 0.25 - 1e-12);
            CHECK(g.mu.z() <= 2.0 + 1e-12);
            CHECK(g.opacity() == doctest::Approx(0.1).epsilon(1e-12));
        }
    }

    SUBCASE("no points and no cameras is an error") {
        CHECK_THROWS_AS(init_cloud(ds, rng), std::runtime_error);
    }
}

TEST_CASE("PFM, PNG, and PLY round-trips") {
    TempDir dir("adgs_test_io_rt");

    SUBCASE("PFM color is exact for float32 values") {
        const Image img = checker(6, 1);
        write_pfm((dir.path / "x.pfm").string(), img);
        const Image back = read_pfm((dir.path / "x.pfm").string());
        REQUIRE(back.same_shape(img));
        for (int c = 0; c < 3; ++c) CHECK((back.ch[c] - img.ch[c]).abs().maxCoeff() == 0.0);
    }

    SUBCASE("PFM depth is exact for float32 values") {
        DepthMap d(3, 4);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) d(r, c) = 0.25 * r + 2.0 * c;
        write_pfm_depth((dir.path / "d.pfm").string(), d);
        const DepthMap back = read_pfm_depth((dir.path / "d.pfm").string());
        CHECK((back - d).abs().maxCoeff() == 0.0);
    }

    SUBCASE("PNG quantizes to 8 bits") {
        const Image img = checker(6, 0);
        write_png((dir.path / "x.png").string(), img);
        const Image back = read_png((dir.path / "x.png").string());
        REQUIRE(back.same_shape(img));
        for (int c = 0; c < 3; ++c) CHECK((back.ch[c] - img.ch[c]).abs().maxCoeff() <= 0.5 / 255.0);
    }

    SUBCASE("PLY round-trip") {
        std::vector<ColoredPoint> pts;
        std::mt19937_64 rng(32);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 20; ++i)
            pts.push_back({Vec3(u(rng) - 0.5, u(rng), 3 * u(rng)),
                           Vec3(std::round(u(rng) * 255) / 255.0, std::round(u(rng) * 255) / 255.0,
                                std::round(u(rng) * 255) / 255.0)});
        write_ply((dir.path / "p.ply").string(), pts);
        const auto back = read_ply((dir.path / "p.ply").string());
        REQUIRE(back.size() == 20);
        for (size_t i = 0; i < 20; ++i) {
            CHECK((back[i].position - pts[i].position).norm() < 1e-6);  // float32 positions
            CHECK((back[i].color - pts[i].color).norm() < 1e-12);       // 8-bit colors, exact
        }
        CHECK_THROWS_AS(read_ply((dir.path / "missing.ply").string()), std::runtime_error);
    }
}

TEST_CASE("checkpoint round-trip is byte-identical and size-predictable") {
    TempDir dir("adgs_test_ckpt");
    std::mt19937_64 rng(33);
    GaussianCloud cloud = random_cloud(17, rng, 2);
    // Float32 storage: snap parameters to float so the round-trip is lossless.
    for (auto& g : cloud.gaussians) {
        g.mu = g.mu.cast<float>().cast<double>();
        g.log_scale = g.log_scale.cast<float>().cast<double>();
        g.quat = g.quat.cast<float>().cast<double>();
        g.opacity_logit = static_cast<float>(g.opacity_logit);
        g.sh = g.sh.cast<float>().cast<double>();
    }
    OptimizerState opt;
    opt.init(cloud);
    opt.step = 7;
    opt.m_mu.setRandom();
    opt.v_sh.setRandom();
    opt.v_sh = opt.v_sh.abs();

    const fs::path p1 = dir.path / "a.ckpt";
    const fs::path p2 = dir.path / "b.ckpt";
    save_checkpoint(p1.string(), cloud, opt, 123);
    CHECK(fs::file_size(p1) == checkpoint_byte_size(17, 2));

    Checkpoint ck = load_checkpoint(p1.string());
    CHECK(ck.iteration == 123);
    CHECK(ck.opt.step == 7);
    CHECK(ck.cloud.sh_degree == 2);
    REQUIRE(ck.cloud.size() == 17);
    for (int i = 0; i < 17; ++i) {
        CHECK((ck.cloud.gaussians[i].mu - cloud.gaussians[i].mu).norm() == 0.0);
        CHECK((ck.cloud.gaussians[i].sh - cloud.gaussians[i].sh).norm() == 0.0);
    }
    CHECK((ck.opt.m_mu - opt.m_mu).abs().maxCoeff() == 0.0);  // moments stored as float64

    save_checkpoint(p2.string(), ck.cloud, ck.opt, ck.iteration);
    CHECK(read_all_bytes_hash(p1) == read_all_bytes_hash(p2));

    // A pruned cloud reloads with the smaller count.
    prune(ck.cloud, 1.1);  // removes everything below opacity 1.1, i.e. all
    CHECK(ck.cloud.size() == 0);
    OptimizerState empty_opt;
    empty_opt.init(ck.cloud);
    save_checkpoint(p2.string(), ck.cloud, empty_opt, 5);
    CHECK(load_checkpoint(p2.string()).cloud.size() == 0);
    CHECK(fs::file_size(p2) == checkpoint_byte_size(0, 2));

    // Truncation is detected.
    {
        std::ifstream in(p1, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 9);
        std::ofstream out(dir.path / "trunc.ckpt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint((dir.path / "trunc.ckpt").string()), std::runtime_error);
    {
        std::ofstream out(dir.path / "junk.ckpt", std::ios::binary);
        out << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(load_checkpoint((dir.path / "junk.ckpt").string()), std::runtime_error);
}

TEST_CASE("synthetic presets") {
    std::mt19937_64 rng(34);

    SUBCASE("flat-card: split, sizes, and self-consistent ground truth") {
        TempDir dir("adgs_test_synth_fc");
        const SceneDataset ds = synth_scene("flat-card", rng, dir.path.string());
        CHECK(ds.train_cameras.size() + ds.test_cameras.size() == 16);
        CHECK(ds.test_cameras.size() == 2);  // every 8th of 16
        CHECK(!ds.points.empty());
        CHECK(ds.test_depths.size() == ds.test_cameras.size());
        for (const auto& img : ds.train_images) {
            CHECK(img.height == 64);
            CHECK(img.width == 64);
        }
        // Reloading the written directory reproduces the returned dataset.
        const SceneDataset re = load_scene(dir.path.string());
        CHECK(re.train_cameras.size() == ds.train_cameras.size());
        for (size_t i = 0; i < ds.test_images.size(); ++i)
            for (int c = 0; c < 3; ++c)
                CHECK((re.test_images[i].ch[c] - ds.test_images[i].ch[c]).abs().maxCoeff() == 0.0);
    }

    SUBCASE("layered-boxes: explicit 12/4 split and layered reference depth") {
        TempDir dir("adgs_test_synth_lb");
        const SceneDataset ds = synth_scene("layered-boxes", rng, dir.path.string());
        CHECK(ds.train_cameras.size() == 12);
        CHECK(ds.test_cameras.size() == 4);
        REQUIRE(ds.test_depths.size() == 4);
        // Depth maps must actually be layered: a meaningful spread across the
        // well-covered pixels. Depth is compositing-weighted, so silhouette
        // pixels with partial coverage can take any value between 0 (empty
        // background) and the full surface depth; restrict the check to
        // pixels near full coverage.
        const DepthMap& d = ds.test_depths[0];
        const double hi_all = d.maxCoeff();
        double lo = 1e9, hi = 0;
        for (int r = 0; r < d.rows(); ++r)
            for (int c = 0; c < d.cols(); ++c)
                if (d(r, c) > 0.6 * hi_all) {
                    lo = std::min(lo, d(r, c));
                    hi = std::max(hi, d(r, c));
                }
        CHECK(hi - lo > 0.3);
        CHECK(lo > 2.0);  // boxes sit well in front of the cameras
    }

    SUBCASE("unknown preset is rejected") {
        TempDir dir("adgs_test_synth_bad");
        CHECK_THROWS_AS(synth_scene("no-such-preset", rng, dir.path.string()), std::exception);
    }
}
