#pragma once

#include <string>
#include <vector>

namespace berncert {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma separated file with a mandatory header row. Blank lines are skipped.
CsvTable read_csv(const std::string& path);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::string& path, const std::string& text);

/// printf("%.{digits}g") without locale surprises.
std::string format_number(double v, int digits = 17);

double parse_double(const std::string& field, const std::string& context);
int parse_int(const std::string& field, const std::string& context);

}  // namespace berncert
