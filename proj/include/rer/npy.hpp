#pragma once

#include <string>

#include "rer/matrix.hpp"

namespace rer {

// NPY v1.0, little-endian C-order. Readable dtypes are <f4 and <f8 (widened
// to double); the writer always emits <f8.
Matrix load_npy(const std::string& path);
void save_npy(const std::string& path, const Matrix& m);

} // namespace rer
