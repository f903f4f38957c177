#include "adgs/dataio.hpp"

#include "adgs/image_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace adgs {

namespace fs = std::filesystem;
using nlohmann::json;

double camera_extent(const std::vector<Camera>& cams) {
    if (cams.empty()) return 1.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto& c : cams) centroid += c.center();
    centroid /= static_cast<double>(cams.size());
    double radius = 0;
    for (const auto& c : cams) radius = std::max(radius, (c.center() - centroid).norm());
    return std::max(radius, 1e-6);
}

SceneDataset load_scene(const std::string& dir) {
    const fs::path root(dir);
    const fs::path manifest = root / "manifest.json";
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest.string());
    json j = json::parse(in);
    if (!j.contains("cameras") || !j["cameras"].is_array() || j["cameras"].empty())
        throw std::runtime_error("manifest: missing or empty 'cameras' list");

    SceneDataset ds;
    if (j.contains("background")) {
        const auto& b = j["background"];
        ds.background = Vec3(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>());
    }

    const auto& cams = j["cameras"];
    const bool explicit_split =
        std::any_of(cams.begin(), cams.end(), [](const json& c) { return c.contains("split"); });

    std::vector<Camera> all_cams;
    for (int i = 0; i < static_cast<int>(cams.size()); ++i) {
        const json& c = cams[i];
        const std::string where = "camera " + std::to_string(i);
        for (const char* field : {"fx", "fy", "cx", "cy", "width", "height", "w2c", "image"})
            if (!c.contains(field))
                throw std::runtime_error("manifest: " + where + " missing field '" + field + "'");

        Camera cam;
        cam.fx = c["fx"].get<double>();
        cam.fy = c["fy"].get<double>();
        cam.cx = c["cx"].get<double>();
        cam.cy = c["cy"].get<double>();
        cam.width = c["width"].get<int>();
        cam.height = c["height"].get<int>();
        if (c.contains("near")) cam.near = c["near"].get<double>();
        const auto& w2c = c["w2c"];
        if (w2c.size() != 3) throw std::runtime_error("manifest: " + where + " w2c must have 3 rows");
        for (int r = 0; r < 3; ++r) {
            if (w2c[r].size() != 4)
                throw std::runtime_error("manifest: " + where + " w2c rows must have 4 entries");
            for (int k = 0; k < 3; ++k) cam.rotation(r, k) = w2c[r][k].get<double>();
            cam.translation[r] = w2c[r][3].get<double>();
        }
        try {
            cam.validate();
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest: " + where + ": " + e.what());
        }

        Image img = read_image((root / c["image"].get<std::string>()).string());
        if (img.height != cam.height || img.width != cam.width)
            throw std::runtime_error("manifest: " + where + " image size does not match camera");

        bool is_test = explicit_split ? (c.contains("split") && c["split"].get<std::string>() == "test")
                                      : (i % 8 == 0);
        if (is_test) {
            ds.test_cameras.push_back(cam);
            ds.test_images.push_back(std::move(img));
            if (c.contains("depth")) {
                DepthMap d = read_pfm_depth((root / c["depth"].get<std::string>()).string());
                if (d.rows() != cam.height || d.cols() != cam.width)
                    throw std::runtime_error("manifest: " + where + " depth size does not match camera");
                ds.test_depths.push_back(std::move(d));
            }
        } else {
            ds.train_cameras.push_back(cam);
            ds.train_images.push_back(std::move(img));
        }
        all_cams.push_back(cam);
    }
    if (!ds.test_depths.empty() && ds.test_depths.size() != ds.test_cameras.size())
        throw std::runtime_error("manifest: reference depths must cover all test views or none");

    if (j.contains("points")) ds.points = read_ply((root / j["points"].get<std::string>()).string());
    ds.scene_extent = camera_extent(all_cams);
    return ds;
}

void save_scene(const std::string& dir, const std::vector<SceneView>& views,
                const std::vector<Image>& images, const std::vector<DepthMap>& depths,
                const std::vector<ColoredPoint>& points, const Vec3& background) {
    const fs::path root(dir);
    fs::create_directories(root / "images");
    if (!depths.empty()) fs::create_directories(root / "depths");

    json j;
    j["background"] = {background.x(), background.y(), background.z()};
    j["cameras"] = json::array();
    for (size_t i = 0; i < views.size(); ++i) {
        const Camera& cam = views[i].camera;
        json c;
        c["fx"] = cam.fx;
        c["fy"] = cam.fy;
        c["cx"] = cam.cx;
        c["cy"] = cam.cy;
        c["width"] = cam.width;
        c["height"] = cam.height;
        c["near"] = cam.near;
        json rows = json::array();
        for (int r = 0; r < 3; ++r)
            rows.push_back({cam.rotation(r, 0), cam.rotation(r, 1), cam.rotation(r, 2),
                            cam.translation[r]});
        c["w2c"] = rows;
        c["image"] = views[i].image_path;
        write_pfm((root / views[i].image_path).string(), images[i]);
        if (!views[i].depth_path.empty()) {
            c["depth"] = views[i].depth_path;
            write_pfm_depth((root / views[i].depth_path).string(), depths[i]);
        }
        if (views[i].is_test) c["split"] = *views[i].is_test ? "test" : "train";
        j["cameras"].push_back(c);
    }
    if (!points.empty()) {
        j["points"] = "points.ply";
        write_ply((root / "points.ply").string(), points);
    }
    std::ofstream out(root / "manifest.json");
    out << j.dump(2) << "\n";
}

GaussianCloud init_cloud(const SceneDataset& dataset, std::mt19937_64& rng, int sh_degree) {
    GaussianCloud cloud;
    cloud.sh_degree = sh_degree;
    cloud.background_color = dataset.background;
    const int k = sh_coeff_count(sh_degree);
    constexpr double kInitOpacity = 0.1;
    constexpr double kShC0 = 0.28209479177387814;

    if (!dataset.points.empty()) {
        const auto& pts = dataset.points;
        const int n = static_cast<int>(pts.size());
        for (int i = 0; i < n; ++i) {
            Gaussian3D g;
            g.mu = pts[i].position;
            // Mean distance to the 3 nearest neighbours, isotropic.
            std::vector<double> d2;
            d2.reserve(n - 1);
            for (int jx = 0; jx < n; ++jx)
                if (jx != i) d2.push_back((pts[jx].position - pts[i].position).squaredNorm());
            std::partial_sort(d2.begin(), d2.begin() + std::min<size_t>(3, d2.size()), d2.end());
            double mean = 0;
            const int m = static_cast<int>(std::min<size_t>(3, d2.size()));
            for (int jx = 0; jx < m; ++jx) mean += std::sqrt(d2[jx]);
            mean = m > 0 ? mean / m : 1.0;
            g.log_scale = Vec3::Constant(std::log(std::max(mean, 1e-7)));
            g.opacity_logit = logit(kInitOpacity);
            g.sh = ShMatrix::Zero(k, 3);
            g.sh.row(0) = ((pts[i].color.array() - 0.5) / kShC0).matrix().transpose();
            cloud.gaussians.push_back(g);
        }
        return cloud;
    }

    if (dataset.train_cameras.empty())
        throw std::runtime_error("init_cloud: no point cloud and no cameras");

    // Random fallback: fill the box spanned by the camera frustums' look-at
    // region, approximated from camera centers and viewing directions.
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& cam : dataset.train_cameras) {
        const Vec3 c0 = cam.center();
        const Vec3 fwd = cam.rotation.transpose() * Vec3(0, 0, 1);
        for (double t : {0.25, 1.0, 2.0}) {
            const Vec3 p = c0 + t * dataset.scene_extent * fwd;
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Gaussian3D g;
        g.mu = Vec3(lo.x() + u(rng) * (hi.x() - lo.x()), lo.y() + u(rng) * (hi.y() - lo.y()),
                    lo.z() + u(rng) * (hi.z() - lo.z()));
        g.log_scale = Vec3::Constant(std::log(0.02 * dataset.scene_extent));
        g.opacity_logit = logit(kInitOpacity);
        g.sh = ShMatrix::Zero(k, 3);
        g.sh.row(0) = ((Vec3(u(rng), u(rng), u(rng)).array() - 0.5) / kShC0).matrix().transpose();
        cloud.gaussians.push_back(g);
    }
    return cloud;
}

}  // namespace adgs
