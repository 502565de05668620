#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "splatgen/cloud.hpp"

namespace splatgen {

namespace detail {
inline const std::vector<std::string>& ply_fields() {
    static const std::vector<std::string> fields = {
        "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
        "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
    return fields;
}
}  // namespace detail

/// Binary little-endian PLY in the de-facto 3DGS layout:
/// x y z, f_dc_0..2, opacity (logit), scale_0..2 (log), rot_0..3, all float32.
inline void write_ply(const GaussianCloud& cloud, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << cloud.size() << "\n";
    for (const auto& name : detail::ply_fields()) header << "property float " << name << "\n";
    header << "end_header\n";
    f << header.str();
    std::vector<float> row(14);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        row[0] = float(cloud.positions[i * 3]);
        row[1] = float(cloud.positions[i * 3 + 1]);
        row[2] = float(cloud.positions[i * 3 + 2]);
        row[3] = float(cloud.f_dc[i * 3]);
        row[4] = float(cloud.f_dc[i * 3 + 1]);
        row[5] = float(cloud.f_dc[i * 3 + 2]);
        row[6] = float(cloud.opacity_logits[i]);
        row[7] = float(cloud.log_scales[i * 3]);
        row[8] = float(cloud.log_scales[i * 3 + 1]);
        row[9] = float(cloud.log_scales[i * 3 + 2]);
        row[10] = float(cloud.rotations[i * 4]);
        row[11] = float(cloud.rotations[i * 4 + 1]);
        row[12] = float(cloud.rotations[i * 4 + 2]);
        row[13] = float(cloud.rotations[i * 4 + 3]);
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
    }
    if (!f) throw IoError("write failed: " + path);
}

inline GaussianCloud read_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "ply") throw ParseError("not a PLY file: missing 'ply' magic");
    bool saw_format = false;
    std::size_t count = 0;
    bool saw_vertex = false;
    std::vector<std::string> props;
    while (std::getline(f, line)) {
        if (line == "end_header") break;
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "binary_little_endian") throw ParseError("unsupported PLY format: " + fmt);
            saw_format = true;
        } else if (tok == "element") {
            std::string name;
            ss >> name >> count;
            if (name != "vertex") throw ParseError("unexpected PLY element: " + name);
            saw_vertex = true;
        } else if (tok == "property") {
            std::string type, name;
            ss >> type >> name;
            if (type != "float") throw ParseError("unsupported property type '" + type + "' for " + name);
            props.push_back(name);
        } else if (tok == "comment" || tok.empty()) {
            continue;
        } else {
            throw ParseError("malformed header line: " + line);
        }
        if (f.eof()) break;
    }
    if (line != "end_header") throw ParseError("malformed header: missing end_header");
    if (!saw_format) throw ParseError("malformed header: missing format line");
    if (!saw_vertex) throw ParseError("malformed header: missing vertex element");

    // Column index of every required field.
    std::vector<std::size_t> col(detail::ply_fields().size());
    for (std::size_t k = 0; k < detail::ply_fields().size(); ++k) {
        const std::string& want = detail::ply_fields()[k];
        auto it = std::find(props.begin(), props.end(), want);
        if (it == props.end()) throw ParseError("missing property " + want);
        col[k] = std::size_t(it - props.begin());
    }

    GaussianCloud cloud;
    cloud.resize(count);
    std::vector<float> row(props.size());
    for (std::size_t i = 0; i < count; ++i) {
        f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
        if (!f) throw ParseError("truncated payload at vertex " + std::to_string(i));
        cloud.positions[i * 3] = row[col[0]];
        cloud.positions[i * 3 + 1] = row[col[1]];
        cloud.positions[i * 3 + 2] = row[col[2]];
        cloud.f_dc[i * 3] = row[col[3]];
        cloud.f_dc[i * 3 + 1] = row[col[4]];
        cloud.f_dc[i * 3 + 2] = row[col[5]];
        cloud.opacity_logits[i] = row[col[6]];
        cloud.log_scales[i * 3] = row[col[7]];
        cloud.log_scales[i * 3 + 1] = row[col[8]];
        cloud.log_scales[i * 3 + 2] = row[col[9]];
        cloud.rotations[i * 4] = row[col[10]];
        cloud.rotations[i * 4 + 1] = row[col[11]];
        cloud.rotations[i * 4 + 2] = row[col[12]];
        cloud.rotations[i * 4 + 3] = row[col[13]];
    }
    return cloud;
}

}  // namespace splatgen
