#include "rer/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rer/errors.hpp"

namespace rer {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    std::size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return false;
    const std::size_t end = s.find_last_not_of(" \t") + 1;
    const char* first = s.data() + begin;
    const char* last = s.data() + end;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

} // namespace

Matrix load_csv_matrix(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw FormatError(path + ": empty csv file");

    std::size_t start = 0;
    {
        // header detection: skip the first row iff any field is non-numeric
        double v;
        bool numeric = true;
        for (const auto& f : split_fields(lines[0])) {
            if (!parse_double(f, v)) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (lines.size() == 1) throw FormatError(path + ": csv contains only a header row");
            start = 1;
        }
    }

    const std::size_t cols = split_fields(lines[start]).size();
    const std::size_t rows = lines.size() - start;
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto fields = split_fields(lines[start + i]);
        if (fields.size() != cols)
            throw FormatError(path + ": row " + std::to_string(i) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(cols));
        for (std::size_t j = 0; j < cols; ++j) {
            double v;
            if (!parse_double(fields[j], v))
                throw FormatError(path + ": non-numeric value '" + fields[j] + "' at row " +
                                  std::to_string(i) + ", column " + std::to_string(j));
            if (!std::isfinite(v))
                throw ValidationError(path + ": non-finite value at row " + std::to_string(i) +
                                      ", column " + std::to_string(j));
            m(i, j) = v;
        }
    }
    return m;
}

void save_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
    if (!out) throw IoError(path + ": write failed");
}

std::vector<long long> load_csv_ints(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<long long> values;
    values.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        long long v = 0;
        const char* first = line.data();
        const char* last = line.data() + line.size();
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last) {
            if (i == 0) continue; // header row
            throw FormatError(path + ": non-integer value '" + line + "' at line " +
                              std::to_string(i + 1));
        }
        values.push_back(v);
    }
    if (values.empty()) throw FormatError(path + ": no integer values found");
    return values;
}

void save_csv_ints(const std::string& path, const std::vector<long long>& values) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open file for writing");
    for (const long long v : values) out << v << '\n';
    if (!out) throw IoError(path + ": write failed");
}

std::vector<bool> load_csv_mask(const std::string& path) {
    const auto ints = load_csv_ints(path);
    std::vector<bool> mask(ints.size());
    for (std::size_t i = 0; i < ints.size(); ++i) {
        if (ints[i] != 0 && ints[i] != 1)
            throw ValidationError(path + ": mask entry " + std::to_string(ints[i]) +
                                  " at line " + std::to_string(i + 1) + " is not 0/1");
        mask[i] = ints[i] == 1;
    }
    return mask;
}

void save_csv_mask(const std::string& path, const std::vector<bool>& mask) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open file for writing");
    for (const bool b : mask) out << (b ? 1 : 0) << '\n';
    if (!out) throw IoError(path + ": write failed");
}

} // namespace rer
