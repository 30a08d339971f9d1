#include "tpis/json_util.h"

#include "tpis/error.h"

namespace tpis {

nlohmann::json ValuesToJson(std::span<const double> values) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : values) {
    if (IsMissing(v)) {
      out.push_back(nullptr);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> ValuesFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kArchiveError, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (v.is_null()) {
      out.push_back(kMissing);
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw Error(ErrorCode::kArchiveError, "non-numeric value in numeric array");
    }
  }
  return out;
}

nlohmann::json MatrixToJson(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", ValuesToJson(m.data())}};
}

Matrix MatrixFromJson(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = ValuesFromJson(j.at("data"));
  if (data.size() != rows * cols) throw Error(ErrorCode::kArchiveError, "matrix size mismatch");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  }
  return m;
}

}  // namespace tpis
