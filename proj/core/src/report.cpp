#include "pointing/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pointing/errors.hpp"

namespace pointing {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLqr1: return "2ol-lqr1";
    case ModelKind::kLqr2: return "2ol-lqr2";
    case ModelKind::kLqr3: return "2ol-lqr3";
    case ModelKind::kTwoOlEq: return "2ol-eq";
    case ModelKind::kMinJerk: return "minjerk";
  }
  return "unknown";
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kAll{ModelKind::kLqr1, ModelKind::kLqr2,
                                           ModelKind::kLqr3, ModelKind::kTwoOlEq,
                                           ModelKind::kMinJerk};
  return kAll;
}

ModelKind model_from_string(const std::string& name) {
  for (ModelKind kind : all_models())
    if (to_string(kind) == name) return kind;
  std::string valid;
  for (ModelKind kind : all_models()) {
    if (!valid.empty()) valid += ", ";
    valid += to_string(kind);
  }
  throw std::invalid_argument("unknown model '" + name + "' (valid: " + valid + ")");
}

namespace {

MetricStats stats_of(const std::vector<double>& values) {
  MetricStats stats;
  stats.n = values.size();
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    stats.degenerate = true;
    return stats;
  }
  double variance = 0.0;
  for (double v : values) variance += (v - stats.mean) * (v - stats.mean);
  variance /= static_cast<double>(values.size() - 1);
  stats.sd = std::sqrt(variance);
  stats.se = stats.sd / std::sqrt(static_cast<double>(values.size()));
  return stats;
}

}  // namespace

std::map<ModelKind, ModelAggregate> aggregate_stats(const std::vector<ComparisonRow>& rows) {
  std::map<ModelKind, std::pair<std::vector<double>, std::vector<double>>> grouped;
  for (const auto& row : rows) {
    if (row.excluded) continue;
    grouped[row.model].first.push_back(row.sse);
    grouped[row.model].second.push_back(row.max_error);
  }
  std::map<ModelKind, ModelAggregate> aggregates;
  for (const auto& [model, metrics] : grouped) {
    ModelAggregate agg;
    agg.sse = stats_of(metrics.first);
    agg.max_error = stats_of(metrics.second);
    aggregates[model] = agg;
  }
  return aggregates;
}

std::vector<ParamObservation> parameter_distributions(const std::vector<ComparisonRow>& rows) {
  std::vector<ParamObservation> observations;
  const auto add = [&](const ComparisonRow& row, const std::string& kind,
                       const std::string& group) {
    const auto push = [&](const char* name, const std::optional<double>& value) {
      if (value)
        observations.push_back({to_string(row.model), kind, group, name, *value});
    };
    push("k", row.k);
    push("d", row.d);
    push("r", row.r);
    push("delta", row.delta);
  };
  for (const auto& row : rows) {
    if (row.excluded) continue;
    char id_label[32];
    std::snprintf(id_label, sizeof(id_label), "%.6g", row.id_bits);
    add(row, "id", id_label);
    if (row.id_bits > 2.0) add(row, "participant", row.participant);
  }
  return observations;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

namespace {

std::string optional_field(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double to_double(const std::string& text, const std::string& path, long line) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc{})
    throw parse_error(path, line, "not a number: '" + text + "'");
  return value;
}

}  // namespace

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial_id,participant,task_id,model,sse,max_error,k,d,r,delta,excluded,reason\n";
  for (const auto& row : rows) {
    out << row.trial_id << ',' << row.participant << ',' << format_double(row.id_bits)
        << ',' << to_string(row.model) << ',' << format_double(row.sse) << ','
        << format_double(row.max_error) << ',' << optional_field(row.k) << ','
        << optional_field(row.d) << ',' << optional_field(row.r) << ','
        << optional_field(row.delta) << ',' << (row.excluded ? 1 : 0) << ','
        << row.reason << '\n';
  }
}

std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path.string(), 0, "cannot open file");
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw parse_error(path.string(), 1, "empty file");
  ++line_no;

  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    const auto fields = split_line(line);
    if (fields.size() < 12) throw parse_error(path.string(), line_no, "too few fields");
    ComparisonRow row;
    row.trial_id = fields[0];
    row.participant = fields[1];
    row.id_bits = to_double(fields[2], path.string(), line_no);
    row.model = model_from_string(fields[3]);
    row.sse = to_double(fields[4], path.string(), line_no);
    row.max_error = to_double(fields[5], path.string(), line_no);
    const auto opt = [&](const std::string& f) -> std::optional<double> {
      if (f.empty()) return std::nullopt;
      return to_double(f, path.string(), line_no);
    };
    row.k = opt(fields[6]);
    row.d = opt(fields[7]);
    row.r = opt(fields[8]);
    row.delta = opt(fields[9]);
    row.excluded = to_double(fields[10], path.string(), line_no) != 0.0;
    row.reason = fields[11];
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_param_csv(const std::vector<ParamObservation>& observations,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "model,group_kind,group,param,value\n";
  for (const auto& obs : observations)
    out << obs.model << ',' << obs.group_kind << ',' << obs.group << ',' << obs.param
        << ',' << format_double(obs.value) << '\n';
}

std::string aggregate_json(const std::map<ModelKind, ModelAggregate>& aggregates) {
  nlohmann::json root;
  for (const auto& [model, agg] : aggregates) {
    const auto metric = [](const MetricStats& stats) {
      nlohmann::json j;
      j["mean"] = stats.mean;
      j["se"] = stats.se;
      j["sd"] = stats.sd;
      j["n"] = stats.n;
      if (stats.degenerate) j["degenerate_sd"] = true;
      return j;
    };
    root[to_string(model)] = {{"sse", metric(agg.sse)}, {"max_error", metric(agg.max_error)}};
  }
  return root.dump(2) + "\n";
}

}  // namespace pointing
