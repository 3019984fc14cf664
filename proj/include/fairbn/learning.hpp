#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairbn/json_io.hpp"
#include "fairbn/kernels.hpp"
#include "fairbn/network.hpp"

namespace fairbn {

enum class ColumnKind { categorical, numeric };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::string> states;  // category set of a categorical column
};

struct Provenance {
  std::string source;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> transforms;
  std::map<std::string, double> medians;
  std::vector<std::string> warnings;
};

/// Columnar records, all values kept as their text form.
struct Dataset {
  std::vector<Column> columns;
  std::vector<std::vector<std::string>> records;
  Provenance provenance;

  std::size_t column_index(const std::string& name) const;  // throws MissingColumn
};

struct DiscretizationRule {
  enum class Type { passthrough, median, thresholds, label_map };
  Type type = Type::passthrough;
  std::vector<double> thresholds;  // strictly increasing; value <= t[i] falls in bin i
  std::vector<std::string> labels;  // bin labels; defaults to low/high for two bins
  std::vector<std::pair<std::string, std::string>> map;  // raw value -> label, declaration order
};

using DiscretizationPolicy = std::map<std::string, DiscretizationRule>;

/// What to do with an empty / NA cell.
struct MissingPolicy {
  enum class Action { drop, fill_value, fill_label };
  Action action = Action::drop;
  std::string value;  // fill_value: raw value used before discretizing; fill_label: state assigned after
};

struct ColumnSchema {
  std::string name;    // variable name
  std::string source;  // CSV header (defaults to name)
  ColumnKind kind = ColumnKind::categorical;
  std::vector<std::string> states;  // optional declared categories
  MissingPolicy missing;
  DiscretizationRule rule;
};

struct Schema {
  std::vector<ColumnSchema> columns;
  DiscretizationPolicy policy() const;
};

Schema schema_from_json(const Json& doc);
Schema load_schema(const std::filesystem::path& path);

/// Parses RFC 4180 CSV text (quoted fields, doubled quotes, CRLF or LF).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Reads the schema's columns in file order. Rows with a missing cell in a column
/// whose policy is `drop` are skipped and counted. Throws Error(MissingColumn,
/// UnparseableValue, IoError).
Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema);
Dataset ingest_csv_text(std::string_view text, const Schema& schema, const std::string& source = "<memory>");

/// Applies the rules; numeric rules on categorical columns throw Error(NonNumericColumn).
/// Median ties go to `low`. Missing cells with a fill_label policy get their label here.
Dataset discretize(const Dataset& data, const DiscretizationPolicy& policy,
                   const std::map<std::string, MissingPolicy>& missing = {});

/// Convenience: ingest + discretize with the schema's rules.
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);

struct FitResult {
  Network network;
  std::vector<std::string> warnings;
};

/// Maximum-likelihood CPTs (with optional additive smoothing) for a fixed structure.
/// Throws Error(EmptyDataset, MissingColumn, StateMismatch).
FitResult fit_parameters(const NetworkSpec& structure, const Dataset& data, double smoothing, Exec exec = Exec::parallel);

namespace kernels {

/// Occurrence counts per CPT entry for every variable: result[v][row * card + state].
/// `codes` holds one state index per (record, variable), record-major.
std::vector<std::vector<std::uint64_t>> count_entries(const Network& shape, const std::vector<StateIndex>& codes,
                                                      std::size_t records, Exec exec);

}  // namespace kernels

Json provenance_json(const Provenance& p);

/// Writes header + records; throws Error(IoError).
void export_csv(const Dataset& data, const std::filesystem::path& path);
std::string to_csv(const Dataset& data);

}  // namespace fairbn
