#include "rer/npy.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rer/errors.hpp"

namespace rer {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string find_dict_value(const std::string& header, const std::string& key,
                            const std::string& path) {
    const auto kpos = header.find("'" + key + "'");
    if (kpos == std::string::npos)
        throw FormatError(path + ": npy header missing key '" + key + "'");
    auto pos = header.find(':', kpos);
    if (pos == std::string::npos)
        throw FormatError(path + ": malformed npy header");
    ++pos;
    while (pos < header.size() && header[pos] == ' ') ++pos;
    // value runs to the next top-level comma or closing brace
    std::string value;
    int depth = 0;
    for (; pos < header.size(); ++pos) {
        const char c = header[pos];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (depth == 0 && (c == ',' || c == '}')) break;
        if (depth < 0) break;
        value += c;
    }
    return value;
}

} // namespace

Matrix load_npy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");

    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0)
        throw FormatError(path + ": not an npy file (bad magic)");

    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    if (!in) throw FormatError(path + ": truncated npy header");
    if (version[0] != 1)
        throw FormatError(path + ": unsupported npy version " +
                          std::to_string(version[0]) + "." + std::to_string(version[1]));

    unsigned char len_bytes[2];
    in.read(reinterpret_cast<char*>(len_bytes), 2);
    if (!in) throw FormatError(path + ": truncated npy header");
    const std::size_t header_len = len_bytes[0] | (static_cast<std::size_t>(len_bytes[1]) << 8);

    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw FormatError(path + ": truncated npy header");

    const std::string descr = find_dict_value(header, "descr", path);
    bool is_f4 = false;
    if (descr.find("'<f8'") != std::string::npos) {
        is_f4 = false;
    } else if (descr.find("'<f4'") != std::string::npos) {
        is_f4 = true;
    } else {
        throw FormatError(path + ": unsupported dtype " + descr +
                          " (expected little-endian float32 or float64)");
    }

    const std::string order = find_dict_value(header, "fortran_order", path);
    if (order.find("True") != std::string::npos)
        throw FormatError(path + ": Fortran-order arrays are not supported");

    std::string shape = find_dict_value(header, "shape", path);
    std::vector<std::size_t> dims;
    for (std::size_t pos = 0; pos < shape.size();) {
        if (!std::isdigit(static_cast<unsigned char>(shape[pos]))) {
            ++pos;
            continue;
        }
        std::size_t end = pos;
        while (end < shape.size() && std::isdigit(static_cast<unsigned char>(shape[end]))) ++end;
        dims.push_back(std::stoull(shape.substr(pos, end - pos)));
        pos = end;
    }
    if (dims.size() != 2)
        throw FormatError(path + ": expected 2-D array, got " +
                          std::to_string(dims.size()) + "-D shape " + shape);

    const std::size_t rows = dims[0], cols = dims[1];
    const std::size_t count = rows * cols;
    const std::size_t item = is_f4 ? 4 : 8;

    std::vector<char> raw(count * item);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw FormatError(path + ": truncated npy data (expected " +
                          std::to_string(raw.size()) + " bytes)");

    Matrix m(rows, cols);
    if (is_f4) {
        for (std::size_t i = 0; i < count; ++i) {
            float f;
            std::memcpy(&f, raw.data() + i * 4, 4);
            m.data()[i] = static_cast<double>(f);
        }
    } else {
        std::memcpy(m.data(), raw.data(), raw.size());
    }

    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(m.data()[i]))
            throw ValidationError(path + ": non-finite value at row " +
                                  std::to_string(i / cols) + ", column " +
                                  std::to_string(i % cols));
    }
    return m;
}

void save_npy(const std::string& path, const Matrix& m) {
    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "), }";
    // pad with spaces so that (10 + len(dict) + 1) % 64 == 0, terminate with \n
    const std::size_t unpadded = 10 + dict.size() + 1;
    const std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict += '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out.write(kMagic, 6);
    const unsigned char version[2] = {1, 0};
    out.write(reinterpret_cast<const char*>(version), 2);
    const std::uint16_t len = static_cast<std::uint16_t>(dict.size());
    const unsigned char len_bytes[2] = {static_cast<unsigned char>(len & 0xff),
                                        static_cast<unsigned char>(len >> 8)};
    out.write(reinterpret_cast<const char*>(len_bytes), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) throw IoError(path + ": write failed");
}

} // namespace rer
