#pragma once

#include <string>
#include <vector>

#include "rer/matrix.hpp"

namespace rer {

// Numeric CSV (RFC 4180 line structure, no quoting needed for numbers).
// A single leading header row is detected and skipped automatically.
Matrix load_csv_matrix(const std::string& path);
void save_csv_matrix(const std::string& path, const Matrix& m);

// One integer per line.
std::vector<long long> load_csv_ints(const std::string& path);
void save_csv_ints(const std::string& path, const std::vector<long long>& values);

std::vector<bool> load_csv_mask(const std::string& path);
void save_csv_mask(const std::string& path, const std::vector<bool>& mask);

} // namespace rer
