#include "ps/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ps {

namespace {

std::string format_real(double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("dataset csv: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_dataset_csv(std::ostream& os, const Dataset& data, bool include_segments) {
  os << "day_index";
  for (const auto& f : data.feature_names()) os << ',' << f;
  for (std::size_t j = 0; j < data.outcome_dim(); ++j) os << ",y_" << j;
  const std::size_t segs = include_segments ? data.segment_columns() : 0;
  for (std::size_t c = 0; c < segs; ++c) os << ",segment_" << c;
  os << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << data.day_index(i);
    for (double v : data.x(i)) os << ',' << format_real(v);
    for (double v : data.y(i)) os << ',' << format_real(v);
    for (std::size_t c = 0; c < segs; ++c) {
      os << ',';
      if (char s = data.segment(i, c)) os << s;
    }
    os << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool include_segments) {
  std::ostringstream os;
  write_dataset_csv(os, data, include_segments);
  write_file_atomic(path, os.str());
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("dataset csv: missing header");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "day_index") throw std::runtime_error("dataset csv: first column must be day_index");
  std::vector<std::string> features;
  std::size_t outcomes = 0, segments = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("segment", 0) == 0) {
      ++segments;
    } else if (h.rfind("y_", 0) == 0) {
      if (segments) throw std::runtime_error("dataset csv: outcome column after segment column");
      ++outcomes;
    } else {
      if (outcomes || segments) throw std::runtime_error("dataset csv: feature column after outcome column");
      features.push_back(h);
    }
  }
  if (outcomes == 0) throw std::runtime_error("dataset csv: no outcome columns");
  Dataset data(features, outcomes, segments);
  std::vector<double> x(features.size()), y(outcomes);
  std::vector<SegmentLabel> seg(segments);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("dataset csv: wrong column count on line " + std::to_string(lineno));
    }
    const auto day = static_cast<std::int64_t>(parse_real(cells[0]));
    for (std::size_t f = 0; f < x.size(); ++f) x[f] = parse_real(cells[1 + f]);
    for (std::size_t j = 0; j < outcomes; ++j) y[j] = parse_real(cells[1 + x.size() + j]);
    for (std::size_t c = 0; c < segments; ++c) {
      const auto& s = cells[1 + x.size() + outcomes + c];
      seg[c] = s.empty() ? SegmentLabel{0} : s[0];
    }
    data.add_row(day, x, y, seg);
  }
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ps
