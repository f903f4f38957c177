#include "adgs/dataio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace adgs {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'G', 'S', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f32(std::ostream& out, float v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t get_u32(std::istream& in) {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t get_u64(std::istream& in) {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
float get_f32(std::istream& in) {
    float v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double get_f64(std::istream& in) {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void put_array(std::ostream& out, const Eigen::ArrayXXd& a) {
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) put_f64(out, a(r, c));
}

void get_array(std::istream& in, Eigen::ArrayXXd& a, int rows, int cols) {
    a.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) a(r, c) = get_f64(in);
}

}  // namespace

size_t checkpoint_byte_size(int count, int sh_degree) {
    const int k = sh_coeff_count(sh_degree);
    const size_t header = 8 + 4 * 4 + 3 * 4;              // magic, version/iter/degree/count, bg
    const size_t params = size_t(count) * (3 + 3 + 4 + 1 + 3 * size_t(k)) * 4;
    const size_t opt = 8 + 2 * size_t(count) * (3 + 3 + 4 + 1 + 3 * size_t(k)) * 8;
    return header + params + opt;
}

void save_checkpoint(const std::string& path, const GaussianCloud& cloud,
                     const OptimizerState& opt, int iteration) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(iteration));
    put_u32(out, static_cast<uint32_t>(cloud.sh_degree));
    put_u32(out, static_cast<uint32_t>(cloud.gaussians.size()));
    for (int i = 0; i < 3; ++i) put_f32(out, static_cast<float>(cloud.background_color[i]));
    for (const auto& g : cloud.gaussians) {
        for (int i = 0; i < 3; ++i) put_f32(out, static_cast<float>(g.mu[i]));
        for (int i = 0; i < 3; ++i) put_f32(out, static_cast<float>(g.log_scale[i]));
        for (int i = 0; i < 4; ++i) put_f32(out, static_cast<float>(g.quat[i]));
        put_f32(out, static_cast<float>(g.opacity_logit));
        for (Eigen::Index r = 0; r < g.sh.rows(); ++r)
            for (int c = 0; c < 3; ++c) put_f32(out, static_cast<float>(g.sh(r, c)));
    }
    put_u64(out, static_cast<uint64_t>(opt.step));
    put_array(out, opt.m_mu);
    put_array(out, opt.v_mu);
    put_array(out, opt.m_log_scale);
    put_array(out, opt.v_log_scale);
    put_array(out, opt.m_quat);
    put_array(out, opt.v_quat);
    put_array(out, opt.m_opacity);
    put_array(out, opt.v_opacity);
    put_array(out, opt.m_sh);
    put_array(out, opt.v_sh);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const uint32_t version = get_u32(in);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.iteration = static_cast<int>(get_u32(in));
    ckpt.cloud.sh_degree = static_cast<int>(get_u32(in));
    const int count = static_cast<int>(get_u32(in));
    const int k = sh_coeff_count(ckpt.cloud.sh_degree);
    for (int i = 0; i < 3; ++i) ckpt.cloud.background_color[i] = get_f32(in);
    ckpt.cloud.gaussians.resize(count);
    for (auto& g : ckpt.cloud.gaussians) {
        for (int i = 0; i < 3; ++i) g.mu[i] = get_f32(in);
        for (int i = 0; i < 3; ++i) g.log_scale[i] = get_f32(in);
        for (int i = 0; i < 4; ++i) g.quat[i] = get_f32(in);
        g.opacity_logit = get_f32(in);
        g.sh.resize(k, 3);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < 3; ++c) g.sh(r, c) = get_f32(in);
    }
    ckpt.opt.step = static_cast<long long>(get_u64(in));
    get_array(in, ckpt.opt.m_mu, count, 3);
    get_array(in, ckpt.opt.v_mu, count, 3);
    get_array(in, ckpt.opt.m_log_scale, count, 3);
    get_array(in, ckpt.opt.v_log_scale, count, 3);
    get_array(in, ckpt.opt.m_quat, count, 4);
    get_array(in, ckpt.opt.v_quat, count, 4);
    get_array(in, ckpt.opt.m_opacity, count, 1);
    get_array(in, ckpt.opt.v_opacity, count, 1);
    get_array(in, ckpt.opt.m_sh, count, 3 * k);
    get_array(in, ckpt.opt.v_sh, count, 3 * k);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace adgs
