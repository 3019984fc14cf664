#include "fairbn/learning.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace fairbn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string low = cell;
  std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return low == "na" || low == "nan" || low == "null";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidDocument, what); }

}  // namespace

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw Error(ErrorKind::MissingColumn, "no column '" + name + "'");
}

DiscretizationPolicy Schema::policy() const {
  DiscretizationPolicy p;
  for (const auto& c : columns) p[c.name] = c.rule;
  return p;
}

Schema schema_from_json(const Json& doc) {
  if (!doc.is_object()) bad("schema must be a JSON object");
  if (doc.contains("format_version") && doc["format_version"] != kFormatVersion) bad("unsupported schema format_version");
  if (!doc.contains("columns") || !doc["columns"].is_array()) bad("schema: missing 'columns' array");
  Schema schema;
  for (const auto& c : doc["columns"]) {
    ColumnSchema col;
    if (!c.contains("name") || !c["name"].is_string()) bad("schema column without a name");
    col.name = c["name"].get<std::string>();
    col.source = c.value("source", col.name);
    const std::string kind = c.value("kind", "categorical");
    if (kind == "numeric") {
      col.kind = ColumnKind::numeric;
    } else if (kind != "categorical") {
      bad("schema column '" + col.name + "': unknown kind '" + kind + "'");
    }
    if (c.contains("states")) col.states = c["states"].get<std::vector<std::string>>();
    if (c.contains("missing")) {
      const auto& m = c["missing"];
      if (m.is_string() && m.get<std::string>() == "drop") {
        col.missing.action = MissingPolicy::Action::drop;
      } else if (m.is_object() && m.contains("fill")) {
        col.missing.action = MissingPolicy::Action::fill_value;
        col.missing.value = m["fill"].is_string() ? m["fill"].get<std::string>() : m["fill"].dump();
      } else if (m.is_object() && m.contains("label")) {
        col.missing.action = MissingPolicy::Action::fill_label;
        col.missing.value = m["label"].get<std::string>();
      } else {
        bad("schema column '" + col.name + "': 'missing' must be \"drop\", {\"fill\": v} or {\"label\": s}");
      }
    }
    if (c.contains("rule")) {
      const auto& r = c["rule"];
      const std::string type = r.is_string() ? r.get<std::string>() : r.value("type", "passthrough");
      if (type == "passthrough") {
        col.rule.type = DiscretizationRule::Type::passthrough;
      } else if (type == "median") {
        col.rule.type = DiscretizationRule::Type::median;
      } else if (type == "thresholds") {
        col.rule.type = DiscretizationRule::Type::thresholds;
        col.rule.thresholds = r.at("thresholds").get<std::vector<double>>();
      } else if (type == "label_map") {
        col.rule.type = DiscretizationRule::Type::label_map;
        for (const auto& pair : r.at("map")) {
          if (!pair.is_array() || pair.size() != 2) bad("label_map entries must be [value, label] pairs");
          const std::string from = pair[0].is_string() ? pair[0].get<std::string>() : pair[0].dump();
          col.rule.map.emplace_back(from, pair[1].get<std::string>());
        }
      } else {
        bad("schema column '" + col.name + "': unknown rule '" + type + "'");
      }
      if (r.is_object() && r.contains("labels")) col.rule.labels = r["labels"].get<std::vector<std::string>>();
    }
    schema.columns.push_back(std::move(col));
  }
  return schema;
}

Schema load_schema(const std::filesystem::path& path) { return schema_from_json(read_json_file(path)); }

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; any = true; break;
      case ',':
        row.push_back(std::move(cell));
        cell.clear();
        any = true;
        break;
      case '\r': break;
      case '\n':
        if (any || !cell.empty()) {
          row.push_back(std::move(cell));
          rows.push_back(std::move(row));
        }
        row.clear();
        cell.clear();
        any = false;
        break;
      default: cell += ch; any = true;
    }
  }
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset ingest_csv_text(std::string_view text, const Schema& schema, const std::string& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorKind::MissingColumn, source + ": no header row");
  std::vector<std::string> header;
  for (const auto& h : rows[0]) header.push_back(trim(h));

  Dataset data;
  data.provenance.source = source;
  std::vector<std::size_t> pos;
  for (const auto& c : schema.columns) {
    auto it = std::find(header.begin(), header.end(), c.source);
    if (it == header.end()) throw Error(ErrorKind::MissingColumn, source + ": no column '" + c.source + "'");
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
    data.columns.push_back({c.name, c.kind, c.states});
  }

  std::vector<std::set<std::string>> seen(schema.columns.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ++data.provenance.rows_read;
    if (rows[r].size() != header.size()) {
      throw Error(ErrorKind::UnparseableValue, source + " row " + std::to_string(r) + ": expected " +
                                                   std::to_string(header.size()) + " fields, found " +
                                                   std::to_string(rows[r].size()));
    }
    std::vector<std::string> rec;
    bool drop = false;
    for (std::size_t c = 0; c < schema.columns.size() && !drop; ++c) {
      const ColumnSchema& col = schema.columns[c];
      std::string cell = trim(rows[r][pos[c]]);
      if (is_missing(cell)) {
        switch (col.missing.action) {
          case MissingPolicy::Action::drop: drop = true; continue;
          case MissingPolicy::Action::fill_value: cell = col.missing.value; break;
          case MissingPolicy::Action::fill_label: rec.emplace_back(); continue;
        }
      }
      if (col.kind == ColumnKind::numeric && !parse_number(cell)) {
        throw Error(ErrorKind::UnparseableValue,
                    source + " row " + std::to_string(r) + " column '" + col.source + "': '" + cell + "' is not a number");
      }
      if (col.kind == ColumnKind::categorical && !col.states.empty() &&
          std::find(col.states.begin(), col.states.end(), cell) == col.states.end()) {
        throw Error(ErrorKind::UnparseableValue,
                    source + " row " + std::to_string(r) + " column '" + col.source + "': unexpected label '" + cell + "'");
      }
      seen[c].insert(cell);
      rec.push_back(std::move(cell));
    }
    if (drop) {
      ++data.provenance.rows_dropped;
      continue;
    }
    data.records.push_back(std::move(rec));
  }
  for (std::size_t c = 0; c < data.columns.size(); ++c) {
    if (data.columns[c].kind == ColumnKind::categorical && data.columns[c].states.empty()) {
      data.columns[c].states.assign(seen[c].begin(), seen[c].end());
    }
  }
  if (data.provenance.rows_dropped > 0) {
    data.provenance.transforms.push_back("dropped " + std::to_string(data.provenance.rows_dropped) +
                                         " rows with missing values");
  }
  return data;
}

Dataset ingest_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_csv_text(ss.str(), schema, path.string());
}

Dataset discretize(const Dataset& data, const DiscretizationPolicy& policy,
                   const std::map<std::string, MissingPolicy>& missing) {
  Dataset out = data;
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    Column& col = out.columns[c];
    auto it = policy.find(col.name);
    if (it == policy.end()) continue;
    const DiscretizationRule& rule = it->second;
    using T = DiscretizationRule::Type;

    auto numeric_values = [&]() {
      if (col.kind != ColumnKind::numeric) {
        throw Error(ErrorKind::NonNumericColumn, "column '" + col.name + "' is categorical");
      }
      std::vector<double> v;
      for (const auto& rec : out.records) {
        if (!rec[c].empty()) v.push_back(*parse_number(rec[c]));
      }
      return v;
    };
    auto bin_with = [&](const std::vector<double>& cuts, std::vector<std::string> labels) {
      if (labels.empty()) {
        if (cuts.size() == 1) {
          labels = {"low", "high"};
        } else {
          for (std::size_t i = 0; i <= cuts.size(); ++i) labels.push_back("bin" + std::to_string(i));
        }
      }
      if (labels.size() != cuts.size() + 1) bad("column '" + col.name + "': need one label per bin");
      for (auto& rec : out.records) {
        if (rec[c].empty()) continue;
        const double v = *parse_number(rec[c]);
        std::size_t b = 0;
        while (b < cuts.size() && v > cuts[b]) ++b;
        rec[c] = labels[b];
      }
      col.states = labels;
    };

    switch (rule.type) {
      case T::passthrough:
        if (col.kind == ColumnKind::numeric) {
          std::vector<std::pair<double, std::string>> distinct;
          for (const auto& rec : out.records) {
            if (rec[c].empty()) continue;
            distinct.emplace_back(*parse_number(rec[c]), rec[c]);
          }
          std::sort(distinct.begin(), distinct.end());
          col.states.clear();
          for (const auto& [v, s] : distinct) {
            if (col.states.empty() || col.states.back() != s) col.states.push_back(s);
          }
        }
        break;
      case T::median: {
        auto v = numeric_values();
        if (v.empty()) throw Error(ErrorKind::EmptyDataset, "column '" + col.name + "' has no values for a median");
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        const double median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        out.provenance.medians[col.name] = median;
        out.provenance.transforms.push_back(col.name + ": median " + format_number(median) + " over " +
                                            std::to_string(n) + " values, <= median -> low");
        bin_with({median}, rule.labels);
        break;
      }
      case T::thresholds: {
        numeric_values();
        if (!std::is_sorted(rule.thresholds.begin(), rule.thresholds.end(), std::less_equal<>()) ||
            std::adjacent_find(rule.thresholds.begin(), rule.thresholds.end()) != rule.thresholds.end() ||
            rule.thresholds.empty()) {
          bad("column '" + col.name + "': thresholds must be nonempty and strictly increasing");
        }
        std::string cuts;
        for (auto t : rule.thresholds) cuts += (cuts.empty() ? "" : ", ") + format_number(t);
        out.provenance.transforms.push_back(col.name + ": thresholds [" + cuts + "]");
        bin_with(rule.thresholds, rule.labels);
        break;
      }
      case T::label_map: {
        std::vector<std::string> labels;
        for (const auto& [from, to] : rule.map) {
          if (std::find(labels.begin(), labels.end(), to) == labels.end()) labels.push_back(to);
        }
        for (std::size_t r = 0; r < out.records.size(); ++r) {
          std::string& cell = out.records[r][c];
          if (cell.empty()) continue;
          const bool numeric = col.kind == ColumnKind::numeric;
          const double num = numeric ? parse_number(cell).value_or(0.0) : 0.0;
          auto hit = std::find_if(rule.map.begin(), rule.map.end(), [&](const auto& m) {
            if (numeric) {
              const auto key = parse_number(m.first);
              return key && *key == num;
            }
            return m.first == cell;
          });
          if (hit == rule.map.end()) {
            throw Error(ErrorKind::UnparseableValue,
                        "record " + std::to_string(r) + " column '" + col.name + "': no label for '" + cell + "'");
          }
          cell = hit->second;
        }
        out.provenance.transforms.push_back(col.name + ": label map");
        col.states = labels;
        break;
      }
    }
    col.kind = ColumnKind::categorical;

    if (auto m = missing.find(col.name); m != missing.end() && m->second.action == MissingPolicy::Action::fill_label) {
      std::size_t filled = 0;
      for (auto& rec : out.records) {
        if (rec[c].empty()) {
          rec[c] = m->second.value;
          ++filled;
        }
      }
      if (std::find(col.states.begin(), col.states.end(), m->second.value) == col.states.end()) {
        col.states.push_back(m->second.value);
      }
      if (filled) {
        out.provenance.transforms.push_back(col.name + ": " + std::to_string(filled) + " missing cells labeled '" +
                                            m->second.value + "'");
      }
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
  std::map<std::string, MissingPolicy> missing;
  for (const auto& c : schema.columns) missing[c.name] = c.missing;
  return discretize(ingest_csv(path, schema), schema.policy(), missing);
}

namespace kernels {

namespace {

struct CountPlan {
  std::vector<std::vector<std::pair<VarIndex, std::size_t>>> parent_strides;
  std::vector<std::size_t> cards;
};

void count_range(const CountPlan& plan, const std::vector<StateIndex>& codes, std::size_t nvars, std::size_t lo,
                 std::size_t hi, std::vector<std::vector<std::uint64_t>>& out) {
  for (std::size_t r = lo; r < hi; ++r) {
    const StateIndex* rec = codes.data() + r * nvars;
    for (std::size_t v = 0; v < nvars; ++v) {
      std::size_t row = 0;
      for (auto [p, stride] : plan.parent_strides[v]) row += stride * static_cast<std::size_t>(rec[p]);
      ++out[v][row * plan.cards[v] + static_cast<std::size_t>(rec[v])];
    }
  }
}

}  // namespace

std::vector<std::vector<std::uint64_t>> count_entries(const Network& shape, const std::vector<StateIndex>& codes,
                                                      std::size_t records, Exec exec) {
  const std::size_t nvars = shape.size();
  CountPlan plan;
  std::vector<std::vector<std::uint64_t>> out(nvars);
  for (VarIndex v = 0; v < nvars; ++v) {
    const Cpt& cpt = shape.cpt(v);
    std::vector<std::pair<VarIndex, std::size_t>> ps;
    std::size_t stride = 1;
    for (std::size_t i = cpt.parents().size(); i-- > 0;) {
      ps.emplace_back(cpt.parents()[i], stride);
      stride *= cpt.parent_cardinalities()[i];
    }
    plan.parent_strides.push_back(std::move(ps));
    plan.cards.push_back(cpt.cardinality());
    out[v].assign(cpt.values().size(), 0);
  }
  if (exec == Exec::serial) {
    count_range(plan, codes, nvars, 0, records, out);
    return out;
  }
  // Integer counts: the merge order cannot change the result.
  const auto chunks = static_cast<long long>((records + kChunk - 1) / kChunk);
#pragma omp parallel
  {
    std::vector<std::vector<std::uint64_t>> local(nvars);
    for (VarIndex v = 0; v < nvars; ++v) local[v].assign(out[v].size(), 0);
#pragma omp for schedule(static)
    for (long long c = 0; c < chunks; ++c) {
      const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
      count_range(plan, codes, nvars, lo, std::min(records, lo + kChunk), local);
    }
#pragma omp critical(fairbn_count_merge)
    for (VarIndex v = 0; v < nvars; ++v) {
      for (std::size_t i = 0; i < out[v].size(); ++i) out[v][i] += local[v][i];
    }
  }
  return out;
}

}  // namespace kernels

namespace {

// Structure-only spec -> network with uniform CPTs, parents in edge declaration order.
Network shape_of(const NetworkSpec& structure) {
  const auto report = validate(structure, false);
  if (!report.empty()) {
    std::string msg;
    for (const auto& i : report) msg += (msg.empty() ? "" : "; ") + i.message;
    throw Error(report.front().kind, msg);
  }
  NetworkSpec spec = structure;
  spec.cpts.clear();
  for (const auto& var : structure.variables) {
    CptSpec cpt;
    cpt.owner = var.name;
    std::vector<const Variable*> parents;
    for (const auto& [p, c] : structure.edges) {
      if (c != var.name) continue;
      cpt.parents.push_back(p);
      parents.push_back(&*std::find_if(structure.variables.begin(), structure.variables.end(),
                                       [&](const Variable& v) { return v.name == p; }));
    }
    std::vector<std::size_t> digit(parents.size(), 0);
    while (true) {
      CptRowSpec row;
      for (std::size_t i = 0; i < parents.size(); ++i) row.given[parents[i]->name] = parents[i]->states[digit[i]];
      row.p.assign(var.states.size(), 1.0 / static_cast<double>(var.states.size()));
      cpt.rows.push_back(std::move(row));
      // Odometer over parent states, last parent fastest.
      std::size_t i = parents.size();
      while (i > 0 && ++digit[i - 1] == parents[i - 1]->states.size()) digit[--i] = 0;
      if (i == 0) break;
    }
    spec.cpts.push_back(std::move(cpt));
  }
  return Network::build(spec);
}

}  // namespace

FitResult fit_parameters(const NetworkSpec& structure, const Dataset& data, double smoothing, Exec exec) {
  if (smoothing < 0.0) throw Error(ErrorKind::InvalidDocument, "smoothing must be >= 0");
  if (data.records.empty()) throw Error(ErrorKind::EmptyDataset, "no records to learn from");
  const Network shape = shape_of(structure);
  const std::size_t nvars = shape.size();

  std::vector<std::size_t> col(nvars);
  for (VarIndex v = 0; v < nvars; ++v) {
    const Variable& var = shape.variable(v);
    col[v] = data.column_index(var.name);
    const Column& c = data.columns[col[v]];
    if (c.kind != ColumnKind::categorical) {
      throw Error(ErrorKind::StateMismatch, "column '" + c.name + "' is numeric; discretize it first");
    }
    std::set<std::string> a(var.states.begin(), var.states.end()), b(c.states.begin(), c.states.end());
    if (a != b) {
      std::string vs, cs;
      for (const auto& s : var.states) vs += (vs.empty() ? "" : ",") + s;
      for (const auto& s : c.states) cs += (cs.empty() ? "" : ",") + s;
      throw Error(ErrorKind::StateMismatch, "variable '" + var.name + "' has states {" + vs + "} but the column has {" + cs + "}");
    }
  }

  std::vector<StateIndex> codes(data.records.size() * nvars);
  for (std::size_t r = 0; r < data.records.size(); ++r) {
    for (VarIndex v = 0; v < nvars; ++v) {
      const auto s = shape.variable(v).state_index(data.records[r][col[v]]);
      if (!s) {
        throw Error(ErrorKind::StateMismatch, "record " + std::to_string(r) + ": '" + data.records[r][col[v]] +
                                                  "' is not a state of '" + shape.variable(v).name + "'");
      }
      codes[r * nvars + v] = *s;
    }
  }
  const auto counts = kernels::count_entries(shape, codes, data.records.size(), exec);

  FitResult result{shape, {}};
  NetworkSpec spec = shape.to_spec();
  for (auto& cpt : spec.cpts) {
    const VarIndex v = shape.index_of(cpt.owner);
    const std::size_t card = shape.variable(v).cardinality();
    for (std::size_t r = 0; r < cpt.rows.size(); ++r) {
      const std::uint64_t* cnt = counts[v].data() + r * card;
      double n = 0.0;
      for (std::size_t s = 0; s < card; ++s) n += static_cast<double>(cnt[s]);
      auto& p = cpt.rows[r].p;
      if (n + smoothing * static_cast<double>(card) <= 0.0) {
        p.assign(card, 1.0 / static_cast<double>(card));
        result.warnings.push_back("unseen parent assignment " + format_assignment(cpt.rows[r].given) + " of '" +
                                  cpt.owner + "': uniform distribution used");
        continue;
      }
      const double denom = n + smoothing * static_cast<double>(card);
      for (std::size_t s = 0; s < card; ++s) p[s] = (static_cast<double>(cnt[s]) + smoothing) / denom;
    }
  }
  result.network = Network::build(spec);
  return result;
}

Json provenance_json(const Provenance& p) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["source"] = p.source;
  doc["rows_read"] = p.rows_read;
  doc["rows_dropped"] = p.rows_dropped;
  doc["rows_used"] = p.rows_read - p.rows_dropped;
  Json medians = Json::object();
  for (const auto& [k, v] : p.medians) medians[k] = v;
  doc["medians"] = medians;
  doc["transforms"] = p.transforms;
  doc["warnings"] = p.warnings;
  return doc;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.columns.size(); ++c) out += (c ? "," : "") + csv_field(data.columns[c].name);
  out += '\n';
  for (const auto& rec : data.records) {
    for (std::size_t c = 0; c < rec.size(); ++c) {
      if (c) out += ',';
      out += csv_field(rec[c]);
    }
    out += '\n';
  }
  return out;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) { write_text_file(path, to_csv(data)); }

}  // namespace fairbn
