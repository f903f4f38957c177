#include "adgs/dataio.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace adgs {

namespace {

struct PlyProperty {
    std::string type;
    std::string name;
};

size_t type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw std::runtime_error("ply: unknown property type " + t);
}

double read_binary_value(const char* p, const std::string& t) {
    if (t == "float" || t == "float32") { float v; std::memcpy(&v, p, 4); return v; }
    if (t == "double" || t == "float64") { double v; std::memcpy(&v, p, 8); return v; }
    if (t == "uchar" || t == "uint8") { return static_cast<unsigned char>(*p); }
    if (t == "char" || t == "int8") { return static_cast<signed char>(*p); }
    if (t == "short" || t == "int16") { short v; std::memcpy(&v, p, 2); return v; }
    if (t == "ushort" || t == "uint16") { unsigned short v; std::memcpy(&v, p, 2); return v; }
    if (t == "int" || t == "int32") { int v; std::memcpy(&v, p, 4); return v; }
    if (t == "uint" || t == "uint32") { unsigned v; std::memcpy(&v, p, 4); return v; }
    throw std::runtime_error("ply: unknown property type " + t);
}

bool is_color_byte(const std::string& t) { return t == "uchar" || t == "uint8"; }

}  // namespace

std::vector<ColoredPoint> read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw std::runtime_error(path + ": not a PLY file");

    std::string format;
    size_t count = 0;
    std::vector<PlyProperty> props;
    bool in_vertex = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            ss >> format;
        } else if (tok == "element") {
            std::string name;
            size_t n;
            ss >> name >> n;
            in_vertex = (name == "vertex");
            if (in_vertex) count = n;
        } else if (tok == "property" && in_vertex) {
            PlyProperty p;
            ss >> p.type >> p.name;
            props.push_back(p);
        } else if (tok == "end_header") {
            break;
        }
    }
    if (format != "ascii" && format != "binary_little_endian")
        throw std::runtime_error(path + ": unsupported PLY format " + format);

    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (int i = 0; i < static_cast<int>(props.size()); ++i) {
        const auto& n = props[i].name;
        if (n == "x") ix = i;
        else if (n == "y") iy = i;
        else if (n == "z") iz = i;
        else if (n == "red") ir = i;
        else if (n == "green") ig = i;
        else if (n == "blue") ib = i;
    }
    if (ix < 0 || iy < 0 || iz < 0) throw std::runtime_error(path + ": PLY lacks x/y/z");

    std::vector<ColoredPoint> points(count);
    std::vector<double> values(props.size());
    if (format == "ascii") {
        for (size_t k = 0; k < count; ++k) {
            for (size_t p = 0; p < props.size(); ++p)
                if (!(in >> values[p])) throw std::runtime_error(path + ": truncated PLY");
            points[k].position = Vec3(values[ix], values[iy], values[iz]);
            Vec3 col(0.5, 0.5, 0.5);
            if (ir >= 0 && ig >= 0 && ib >= 0) {
                col = Vec3(values[ir], values[ig], values[ib]);
                if (is_color_byte(props[ir].type)) col /= 255.0;
            }
            points[k].color = col;
        }
    } else {
        size_t stride = 0;
        std::vector<size_t> offsets(props.size());
        for (size_t p = 0; p < props.size(); ++p) {
            offsets[p] = stride;
            stride += type_size(props[p].type);
        }
        std::vector<char> row(stride);
        for (size_t k = 0; k < count; ++k) {
            in.read(row.data(), static_cast<std::streamsize>(stride));
            if (!in) throw std::runtime_error(path + ": truncated PLY");
            points[k].position = Vec3(read_binary_value(row.data() + offsets[ix], props[ix].type),
                                      read_binary_value(row.data() + offsets[iy], props[iy].type),
                                      read_binary_value(row.data() + offsets[iz], props[iz].type));
            Vec3 col(0.5, 0.5, 0.5);
            if (ir >= 0 && ig >= 0 && ib >= 0) {
                col = Vec3(read_binary_value(row.data() + offsets[ir], props[ir].type),
                           read_binary_value(row.data() + offsets[ig], props[ig].type),
                           read_binary_value(row.data() + offsets[ib], props[ib].type));
                if (is_color_byte(props[ir].type)) col /= 255.0;
            }
            points[k].color = col;
        }
    }
    return points;
}

void write_ply(const std::string& path, const std::vector<ColoredPoint>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << points.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "end_header\n";
    for (const auto& p : points) {
        const float xyz[3] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                              static_cast<float>(p.position.z())};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        for (int c = 0; c < 3; ++c) {
            const unsigned char b =
                static_cast<unsigned char>(std::lround(std::clamp(p.color[c], 0.0, 1.0) * 255.0));
            out.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
}

}  // namespace adgs
