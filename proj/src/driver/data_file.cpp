#include "mixmps/driver/data_file.h"

#include <cerrno>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

namespace mixmps::driver {

std::vector<std::string> column_names(const MeasureFile& spec) {
  std::vector<std::string> cols{"t"};
  if (spec.shape == Shape::Sites) cols.emplace_back("site");
  if (spec.shape == Shape::Matrix) {
    cols.emplace_back("i");
    cols.emplace_back("j");
  }
  for (const auto& item : spec.items) {
    cols.push_back("re[" + item.label + "]");
    cols.push_back("im[" + item.label + "]");
  }
  return cols;
}

DataFile::DataFile(const std::filesystem::path& path, const MeasureFile& spec,
                   const std::string& run_name)
    : path_(path) {
  file_ = std::fopen(path.c_str(), "w");
  if (!file_) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  fmt::print(file_, "# run: {}\n", run_name);
  fmt::print(file_, "# file: {}\n", spec.filename);
  fmt::print(file_, "# normalized by trace: {}\n", spec.normalize ? "yes" : "no");
  const auto cols = column_names(spec);
  fmt::print(file_, "# columns:");
  for (const auto& c : cols) fmt::print(file_, " {}", c);
  fmt::print(file_, "\n");
}

DataFile::~DataFile() {
  if (file_) std::fclose(file_);
}

void DataFile::write_row(const std::vector<double>& columns) {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (!std::isfinite(columns[k])) {
      throw NonFiniteError(fmt::format("non-finite value in {} (row starting t={}, column {})",
                                       path_.filename().string(), columns.front(), k + 1));
    }
  }
  std::string line;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k > 0) line += ' ';
    line += fmt::format("{:.16e}", columns[k]);
  }
  line += '\n';
  std::fputs(line.c_str(), file_);
}

void DataFile::flush() { std::fflush(file_); }

}  // namespace mixmps::driver
