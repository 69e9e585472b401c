#include "shiftlens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace shiftlens {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
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

bool parse_double(const std::string& cell, double& value) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& cell, long& value) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int Dataset::class_count() const {
  if (!labels) return 0;
  int max_label = -1;
  for (int y : *labels) max_label = std::max(max_label, y);
  return max_label + 1;
}

void Dataset::validate() const {
  if (rows() < 1 || dims() < 1) throw SchemaError("dataset must have at least one row and one column");
  if (missing.mask.size() != 0 &&
      (missing.mask.rows() != rows() || missing.mask.cols() != dims()))
    throw ShapeError("missing mask shape does not match features");
  for (Index i = 0; i < rows(); ++i)
    for (Index j = 0; j < dims(); ++j) {
      bool is_missing = missing.mask.size() != 0 && missing.mask(i, j);
      if (!is_missing && !std::isfinite(features(i, j)))
        throw DomainError("non-finite feature entry at row " + std::to_string(i + 1) +
                          " that is not marked missing");
    }
  if (labels) {
    if (static_cast<Index>(labels->size()) != rows())
      throw ShapeError("label count does not match row count");
    for (int y : *labels)
      if (y < 0) throw DomainError("labels must be non-negative class ids");
  }
  if (feature_names && static_cast<Index>(feature_names->size()) != dims())
    throw ShapeError("feature name count does not match column count");
}

Dataset Dataset::select_rows(const std::vector<Index>& idx) const {
  Dataset out;
  out.features.resize(static_cast<Index>(idx.size()), dims());
  if (missing.mask.size() != 0) out.missing.mask.resize(static_cast<Index>(idx.size()), dims());
  if (labels) out.labels.emplace();
  out.feature_names = feature_names;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.features.row(static_cast<Index>(k)) = features.row(idx[k]);
    if (missing.mask.size() != 0) out.missing.mask.row(static_cast<Index>(k)) = missing.mask.row(idx[k]);
    if (labels) out.labels->push_back((*labels)[static_cast<std::size_t>(idx[k])]);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset file: " + path.string());
  std::vector<std::string> header = split_fields(line);

  Index label_index = -1;
  if (label_column) {
    auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end())
      throw SchemaError("label column \"" + *label_column + "\" not found in " + path.string());
    label_index = static_cast<Index>(it - header.begin());
  }

  std::vector<std::string> names;
  for (Index c = 0; c < static_cast<Index>(header.size()); ++c)
    if (c != label_index) names.push_back(header[static_cast<std::size_t>(c)]);

  std::vector<std::vector<double>> feature_rows;
  std::vector<std::vector<bool>> missing_rows;
  std::vector<int> labels;
  bool any_missing = false;

  Index data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;  // trailing newline
    ++data_row;
    std::vector<std::string> cells = split_fields(line);
    if (cells.size() != header.size())
      throw SchemaError("row " + std::to_string(data_row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    std::vector<double> feats;
    std::vector<bool> miss;
    feats.reserve(names.size());
    for (Index c = 0; c < static_cast<Index>(cells.size()); ++c) {
      const std::string& cell = cells[static_cast<std::size_t>(c)];
      if (c == label_index) {
        long y = 0;
        if (!parse_int(cell, y) || y < 0)
          throw ParseError("row " + std::to_string(data_row) + ", column \"" +
                           header[static_cast<std::size_t>(c)] + "\": invalid class label \"" + cell + "\"");
        labels.push_back(static_cast<int>(y));
        continue;
      }
      if (cell.empty() || cell == "NaN") {
        feats.push_back(std::numeric_limits<double>::quiet_NaN());
        miss.push_back(true);
        any_missing = true;
        continue;
      }
      double v = 0;
      if (!parse_double(cell, v) || !std::isfinite(v))
        throw ParseError("row " + std::to_string(data_row) + ", column \"" +
                         header[static_cast<std::size_t>(c)] + "\": invalid numeric cell \"" + cell + "\"");
      feats.push_back(v);
      miss.push_back(false);
    }
    feature_rows.push_back(std::move(feats));
    missing_rows.push_back(std::move(miss));
  }

  if (feature_rows.empty()) throw SchemaError("dataset has no data rows: " + path.string());
  Index n = static_cast<Index>(feature_rows.size());
  Index d = static_cast<Index>(names.size());
  if (d < 1) throw SchemaError("dataset has no feature columns: " + path.string());

  Dataset out;
  out.features.resize(n, d);
  out.missing.mask = BoolMatrix::Constant(n, d, false);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) {
      out.features(i, j) = feature_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out.missing.mask(i, j) = missing_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  if (!any_missing) out.missing.mask = BoolMatrix::Constant(n, d, false);
  if (label_index >= 0) out.labels = std::move(labels);
  out.feature_names = std::move(names);
  out.validate();
  return out;
}

Dataset load_dataset_auto(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw SchemaError("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(probe, line)) throw SchemaError("empty dataset file: " + path.string());
  std::vector<std::string> header = split_fields(line);
  bool has_label = std::find(header.begin(), header.end(), "label") != header.end();
  probe.close();
  return load_dataset(path, has_label ? std::optional<std::string>("label") : std::nullopt);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write dataset file: " + path.string());
  for (Index j = 0; j < data.dims(); ++j) {
    if (j) out << ',';
    if (data.feature_names)
      out << (*data.feature_names)[static_cast<std::size_t>(j)];
    else
      out << 'f' << j;
  }
  if (data.labeled()) out << ",label";
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.dims(); ++j) {
      if (j) out << ',';
      bool is_missing = data.missing.mask.size() != 0 && data.missing.mask(i, j);
      if (!is_missing) out << format_value(data.features(i, j));
    }
    if (data.labeled()) out << ',' << (*data.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

bool FeatureGrouping::is_identity() const {
  if (group_count != static_cast<int>(group_of.size())) return false;
  for (std::size_t i = 0; i < group_of.size(); ++i)
    if (group_of[i] != static_cast<int>(i)) return false;
  return true;
}

std::vector<std::vector<Index>> FeatureGrouping::members() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(group_count));
  for (std::size_t i = 0; i < group_of.size(); ++i)
    out[static_cast<std::size_t>(group_of[i])].push_back(static_cast<Index>(i));
  return out;
}

FeatureGrouping FeatureGrouping::identity(Index d) {
  if (d < 1) throw DomainError("grouping needs at least one feature");
  FeatureGrouping g;
  g.group_of.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) g.group_of[static_cast<std::size_t>(i)] = static_cast<int>(i);
  g.group_count = static_cast<int>(d);
  return g;
}

FeatureGrouping FeatureGrouping::contiguous_blocks(Index d, Index block_size) {
  if (d < 1) throw DomainError("grouping needs at least one feature");
  if (block_size < 1) throw DomainError("block size must be positive");
  FeatureGrouping g;
  g.group_of.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) g.group_of[static_cast<std::size_t>(i)] = static_cast<int>(i / block_size);
  g.group_count = static_cast<int>((d + block_size - 1) / block_size);
  return g;
}

FeatureGrouping FeatureGrouping::explicit_map(std::vector<int> group_of) {
  if (group_of.empty()) throw DomainError("grouping needs at least one feature");
  int max_id = -1;
  for (int id : group_of) {
    if (id < 0) throw DomainError("group ids must be non-negative");
    max_id = std::max(max_id, id);
  }
  std::vector<bool> seen(static_cast<std::size_t>(max_id + 1), false);
  for (int id : group_of) seen[static_cast<std::size_t>(id)] = true;
  for (int id = 0; id <= max_id; ++id)
    if (!seen[static_cast<std::size_t>(id)])
      throw DomainError("group ids must cover 0.." + std::to_string(max_id) +
                        " without gaps; id " + std::to_string(id) + " is unused");
  FeatureGrouping g;
  g.group_of = std::move(group_of);
  g.group_count = max_id + 1;
  return g;
}

}  // namespace shiftlens
