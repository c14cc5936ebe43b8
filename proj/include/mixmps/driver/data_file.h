#pragma once

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixmps/driver/config.h"

namespace mixmps::driver {

/// A NaN or Inf reached a data row.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One output file. Rows are space separated numbers in %.16e; header lines
/// start with '#'.
class DataFile {
 public:
  DataFile(const std::filesystem::path& path, const MeasureFile& spec, const std::string& run_name);
  ~DataFile();
  DataFile(const DataFile&) = delete;
  DataFile& operator=(const DataFile&) = delete;

  /// Writes one row; the leading columns (time, site indices) are printed
  /// like the values. Throws NonFiniteError before writing anything invalid.
  void write_row(const std::vector<double>& columns);
  void flush();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

/// Column names of a measure file: t [site | i j] then re/im per item.
std::vector<std::string> column_names(const MeasureFile& spec);

}  // namespace mixmps::driver
