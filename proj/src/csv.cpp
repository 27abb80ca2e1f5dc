#include "regm/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "regm/error.hpp"
#include "regm/model.hpp"

namespace regm {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("failed to format double");
  return std::string(buf.data(), end);
}

double parse_double(const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw Error("not a number: '" + text + "'");
  }
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos != text.size()) throw Error("not a number: '" + text + "'");
  return v;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> row;
  for (Eigen::Index j = 0; j < data.p(); ++j) row.push_back("x" + std::to_string(j + 1));
  row.emplace_back("y");
  out << join_row(row) << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < data.p(); ++j) row.push_back(format_double(data.X()(i, j)));
    row.push_back(format_double(data.Y()[i]));
    out << join_row(row) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path, bool intercept_included) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 2 || header.back() != "y") throw Error(path.string() + ": header must be x1,...,xp,y");
  for (std::size_t j = 0; j + 1 < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) throw Error(path.string() + ": unexpected column '" + header[j] + "'");
  }
  const auto p = static_cast<Eigen::Index>(header.size() - 1);

  std::vector<double> values;
  Eigen::Index n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (static_cast<Eigen::Index>(fields.size()) != p + 1) {
      throw Error(path.string() + ": row " + std::to_string(n + 1) + " has " + std::to_string(fields.size()) + " fields");
    }
    for (const auto& f : fields) values.push_back(parse_double(f));
    ++n;
  }
  if (n == 0) throw Error(path.string() + ": no observations");
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = values[static_cast<std::size_t>(i * (p + 1) + j)];
    Y[i] = values[static_cast<std::size_t>(i * (p + 1) + p)];
  }
  return Dataset(std::move(X), std::move(Y), intercept_included);
}

void write_matrix_rows_csv(const Eigen::MatrixXd& rows, const std::string& prefix,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> row{"i"};
  for (Eigen::Index j = 0; j < rows.cols(); ++j) row.push_back(prefix + "_" + std::to_string(j + 1));
  out << join_row(row) << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    row.clear();
    row.push_back(std::to_string(i + 1));
    for (Eigen::Index j = 0; j < rows.cols(); ++j) row.push_back(format_double(rows(i, j)));
    out << join_row(row) << '\n';
  }
}

}  // namespace regm
