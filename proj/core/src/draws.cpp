#include "star/draws.hpp"

#include "star/error.hpp"

#include <filesystem>
#include <fstream>

namespace star {

const Eigen::MatrixXd& PosteriorDraws::get(const std::string& name) const {
  const auto it = matrices_.find(name);
  if (it == matrices_.end()) throw Error(ErrorKind::Input, "draws have no matrix '" + name + "'");
  return it->second;
}

Eigen::MatrixXd& PosteriorDraws::get(const std::string& name) {
  const auto it = matrices_.find(name);
  if (it == matrices_.end()) throw Error(ErrorKind::Input, "draws have no matrix '" + name + "'");
  return it->second;
}

void PosteriorDraws::set(const std::string& name, Eigen::MatrixXd m) {
  matrices_[name] = std::move(m);
}

std::vector<std::string> PosteriorDraws::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : matrices_) out.push_back(k);
  return out;
}

Eigen::Index PosteriorDraws::draws() const {
  if (has("sigma")) return get("sigma").rows();
  return matrices_.empty() ? 0 : matrices_.begin()->second.rows();
}

std::string PosteriorDraws::binary_path(const std::string& json_path) {
  std::filesystem::path p(json_path);
  p.replace_extension(".bin");
  return p.string();
}

void PosteriorDraws::save(const std::string& json_path) const {
  const std::string bin = binary_path(json_path);
  std::ofstream data(bin, std::ios::binary);
  if (!data) throw Error(ErrorKind::Input, "cannot write '" + bin + "'");

  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : matrices_) {
    table.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    data.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    offset += sizeof(double) * static_cast<std::uint64_t>(m.size());
  }
  if (!data) throw Error(ErrorKind::Input, "failed writing '" + bin + "'");

  nlohmann::json header = meta;
  header["binary"] = std::filesystem::path(bin).filename().string();
  header["layout"] = "column-major float64";
  header["matrices"] = table;
  std::ofstream out(json_path);
  if (!out) throw Error(ErrorKind::Input, "cannot write '" + json_path + "'");
  out << header.dump(1) << '\n';
}

PosteriorDraws PosteriorDraws::load(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorKind::Input, "cannot open '" + json_path + "'");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, "'" + json_path + "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::path(json_path).parent_path();
  const auto bin = (dir / header.at("binary").get<std::string>()).string();
  std::ifstream data(bin, std::ios::binary);
  if (!data) throw Error(ErrorKind::Input, "cannot open '" + bin + "'");

  PosteriorDraws d;
  for (const auto& entry : header.at("matrices")) {
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    data.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    data.read(reinterpret_cast<char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!data) throw Error(ErrorKind::Input, "'" + bin + "' is truncated");
    d.matrices_[entry.at("name").get<std::string>()] = std::move(m);
  }
  header.erase("matrices");
  header.erase("binary");
  header.erase("layout");
  d.meta = std::move(header);
  return d;
}

PosteriorDraws PosteriorDraws::concatenate(const std::vector<PosteriorDraws>& chains) {
  if (chains.empty()) return {};
  PosteriorDraws out;
  out.meta = chains.front().meta;
  for (const auto& [name, first] : chains.front().matrices_) {
    Eigen::Index rows = 0;
    for (const auto& c : chains) {
      const auto& m = c.get(name);
      if (m.cols() != first.cols()) throw Error(ErrorKind::State, "chains disagree on '" + name + "'");
      rows += m.rows();
    }
    Eigen::MatrixXd stacked(rows, first.cols());
    Eigen::Index r = 0;
    for (const auto& c : chains) {
      const auto& m = c.get(name);
      stacked.middleRows(r, m.rows()) = m;
      r += m.rows();
    }
    out.matrices_[name] = std::move(stacked);
  }
  return out;
}

}  // namespace star
