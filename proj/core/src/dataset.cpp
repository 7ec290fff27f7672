#include "star/dataset.hpp"

#include "star/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace star {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::Input, "row " + std::to_string(row) + ", column '" + column +
                                      "': not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

std::size_t Dataset::column(const std::string& name) const {
  for (std::size_t j = 0; j < predictor_names.size(); ++j) {
    if (predictor_names[j] == name) return j;
  }
  throw Error(ErrorKind::Input, "no predictor named '" + name + "'");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.predictor_names = predictor_names;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    out.y.push_back(y[rows[r]]);
    if (has_truth()) out.lambda_star.push_back(lambda_star[rows[r]]);
  }
  return out;
}

Dataset Dataset::read_csv(std::istream& in, const std::string& response) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Input, "empty CSV");
  const auto header = split_row(line);

  int y_col = -1, truth_col = -1;
  std::vector<int> x_cols;
  Dataset d;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == response) {
      y_col = static_cast<int>(c);
    } else if (header[c] == "lambda_star") {
      truth_col = static_cast<int>(c);
    } else {
      x_cols.push_back(static_cast<int>(c));
      d.predictor_names.push_back(header[c]);
    }
  }
  if (y_col < 0) throw Error(ErrorKind::Input, "CSV has no response column '" + response + "'");

  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Input, "row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " fields, expected " +
                                        std::to_string(header.size()));
    }
    const double yv = parse_number(cells[static_cast<std::size_t>(y_col)], row, response);
    if (!(yv >= 0.0) || yv != std::floor(yv) || yv > 2e9) {
      throw Error(ErrorKind::Input, "row " + std::to_string(row) +
                                        ": response must be a nonnegative integer");
    }
    d.y.push_back(static_cast<int>(yv));
    if (truth_col >= 0) {
      d.lambda_star.push_back(
          parse_number(cells[static_cast<std::size_t>(truth_col)], row, "lambda_star"));
    }
    std::vector<double> xs;
    xs.reserve(x_cols.size());
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const double v = parse_number(cells[static_cast<std::size_t>(x_cols[k])], row,
                                    d.predictor_names[k]);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::Input, "row " + std::to_string(row) + ": non-finite predictor");
      }
      xs.push_back(v);
    }
    rows.push_back(std::move(xs));
  }
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return d;
}

Dataset Dataset::read_csv_file(const std::string& path, const std::string& response) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open '" + path + "'");
  return read_csv(in, response);
}

void Dataset::write_csv(std::ostream& out) const {
  out << "y";
  for (const auto& name : predictor_names) out << ',' << name;
  if (has_truth()) out << ",lambda_star";
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < y.size(); ++i) {
    out << y[i];
    for (Eigen::Index k = 0; k < X.cols(); ++k) out << ',' << X(static_cast<Eigen::Index>(i), k);
    if (has_truth()) out << ',' << lambda_star[i];
    out << '\n';
  }
}

void Dataset::write_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Input, "cannot write '" + path + "'");
  write_csv(out);
}

}  // namespace star
