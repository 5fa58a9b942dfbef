#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cwl/errors.hpp"
#include "cwl/estimation.hpp"

namespace cwl {

/// 17 significant digits: enough to round-trip any double exactly, and byte
/// stable for reproducibility checks.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace csv_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline Opinion parse_opinion(const std::string& token, const std::string& file, long line,
                             int column) {
  if (token == "1") return 1;
  if (token == "-1") return -1;
  throw ParseError(file + ":" + std::to_string(line) + ": column " + std::to_string(column) +
                       ": invalid opinion token '" + token + "' (expected '1' or '-1')",
                   line, column);
}

}  // namespace csv_detail

/// Opinion file format: header `task,expert_1,...,expert_N[,label]`, one row
/// per task, opinion cells `1` or `-1`. Lines starting with '#' are metadata
/// and skipped.
inline OpinionMatrix read_opinions_csv(std::istream& in, const std::string& file) {
  std::string line;
  long line_no = 0;
  // header
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = csv_detail::split_fields(line);
    break;
  }
  if (header.empty()) throw ParseError(file + ": empty input, expected a header row", line_no, 1);
  if (header[0] != "task") {
    throw ParseError(file + ":" + std::to_string(line_no) + ": column 1: header must start with 'task'",
                     line_no, 1);
  }
  bool labeled = !header.empty() && header.back() == "label";
  const int experts = static_cast<int>(header.size()) - 1 - (labeled ? 1 : 0);
  if (experts < 1) {
    throw ParseError(file + ":" + std::to_string(line_no) + ": header names no expert columns",
                     line_no, 1);
  }
  for (int i = 0; i < experts; ++i) {
    const std::string expected = "expert_" + std::to_string(i + 1);
    if (header[static_cast<std::size_t>(i + 1)] != expected) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": column " + std::to_string(i + 2) +
                           ": expected header '" + expected + "'",
                       line_no, i + 2);
    }
  }
  OpinionMatrix m(experts);
  std::vector<Opinion> column(static_cast<std::size_t>(experts));
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = csv_detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no, 1);
    }
    for (int i = 0; i < experts; ++i) {
      column[static_cast<std::size_t>(i)] =
          csv_detail::parse_opinion(fields[static_cast<std::size_t>(i + 1)], file, line_no, i + 2);
    }
    if (labeled) {
      const Opinion y = csv_detail::parse_opinion(fields.back(), file, line_no,
                                                  static_cast<int>(fields.size()));
      m.append_column(column, y);
    } else {
      m.append_column(column);
    }
  }
  if (m.tasks() == 0) {
    throw ParseError(file + ": no task rows after the header", line_no, 1);
  }
  return m;
}

inline void write_opinions_csv(std::ostream& out, const OpinionMatrix& m) {
  out << "task";
  for (int i = 0; i < m.experts(); ++i) out << ",expert_" << (i + 1);
  if (m.has_labels()) out << ",label";
  out << "\n";
  for (long t = 0; t < m.tasks(); ++t) {
    out << (t + 1);
    const auto col = m.column(t);
    for (Opinion v : col) out << ',' << static_cast<int>(v);
    if (m.has_labels()) out << ',' << static_cast<int>(m.label(t));
    out << "\n";
  }
}

/// Decisions file: one ±1 row per task. Parsing skips '#' metadata lines, so
/// a re-read yields exactly the task rows.
inline std::vector<Opinion> read_decisions_csv(std::istream& in, const std::string& file) {
  std::string line;
  long line_no = 0;
  std::vector<Opinion> decisions;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = csv_detail::split_fields(line);
    if (!saw_header) {
      if (fields.empty() || fields[0] != "task") {
        throw ParseError(file + ":" + std::to_string(line_no) + ": expected 'task,...' header",
                         line_no, 1);
      }
      saw_header = true;
      continue;
    }
    if (fields.size() < 2) {
      throw ParseError(file + ":" + std::to_string(line_no) + ": expected at least two fields",
                       line_no, 1);
    }
    decisions.push_back(csv_detail::parse_opinion(fields[1], file, line_no, 2));
  }
  return decisions;
}

}  // namespace cwl
