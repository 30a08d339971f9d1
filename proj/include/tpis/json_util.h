#pragma once

#include <vector>

#include "json.hpp"
#include "tpis/matrix.h"

namespace tpis {

// Missing cells are written as null.
nlohmann::json ValuesToJson(std::span<const double> values);
std::vector<double> ValuesFromJson(const nlohmann::json& j);

// {"rows": r, "cols": c, "data": [...row-major...]}
nlohmann::json MatrixToJson(const Matrix& m);
Matrix MatrixFromJson(const nlohmann::json& j);

}  // namespace tpis
