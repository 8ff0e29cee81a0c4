#include "judgeaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace judgeaudit {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string signed_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", decimals, v);
  return buf;
}

/// "3.63 (+1.7%)*"; the star marks a strictly positive full-precision delta.
std::string delta_cell(double mean, double rel_change, bool success) {
  return fixed(mean, 2) + " (" + signed_fixed(rel_change, 1) + "%)" + (success ? "*" : "");
}

std::vector<Benchmark> benchmarks_present(const AuditReport& report) {
  std::set<Benchmark> seen;
  for (const auto& cell : report.cells) seen.insert(cell.benchmark);
  std::vector<Benchmark> out;
  for (Benchmark b : kAllBenchmarks) {
    if (seen.count(b)) out.push_back(b);
  }
  return out;
}

struct CellLookup {
  std::map<std::tuple<std::string, std::string, Benchmark>, const CellMean*> cells;
  std::map<std::tuple<std::string, std::string, Benchmark>, const DeltaRecord*> deltas;

  explicit CellLookup(const AuditReport& report) {
    for (const auto& cell : report.cells) {
      cells[{cell.judge, cell.condition.key(), cell.benchmark}] = &cell;
    }
    for (const auto& delta : report.deltas) {
      deltas[{delta.judge, delta.condition.key(), delta.benchmark}] = &delta;
    }
  }
};

std::string markdown_row(const std::vector<std::string>& cols) {
  return "| " + join(cols, " | ") + " |";
}

std::string markdown_rule(std::size_t n) {
  std::vector<std::string> dashes(n, "---");
  return markdown_row(dashes);
}

}  // namespace

AuditReport build_report(ReportMeta meta, const std::vector<ScoreRecord>& records) {
  AuditReport report;
  report.meta = std::move(meta);
  CellAggregate aggregate = aggregate_cells(records);
  report.dropped_cells = aggregate.dropped_cells;
  report.cells = std::move(aggregate.cells);
  report.deltas = delta_records(CellAggregate{report.cells, report.dropped_cells});
  report.technique_rollup = technique_summaries(report.deltas);
  report.model_rollup = model_summaries(report.deltas);
  return report;
}

AuditReport build_pairwise_report(ReportMeta meta, const std::vector<PairwiseRecord>& records) {
  AuditReport report;
  report.meta = std::move(meta);
  std::map<std::pair<std::string, std::string>, std::vector<PairwiseRecord>> by_condition;
  std::map<std::pair<std::string, std::string>, Condition> conditions;
  for (const auto& record : records) {
    const auto key = std::make_pair(record.judge, record.condition_on_a.key());
    by_condition[key].push_back(record);
    conditions.emplace(key, record.condition_on_a);
  }
  for (const auto& [key, group] : by_condition) {
    ValidPairFilter filtered = valid_pairs(group);
    PairwiseReportRow row;
    row.judge = key.first;
    row.condition_on_a = conditions.at(key);
    row.dropped_pairs = filtered.dropped_pairs;
    if (!filtered.records.empty()) row.percentages = pairwise_percentages(filtered.records);
    report.pairwise_rows.push_back(std::move(row));
  }
  return report;
}

std::string render_main_table(const AuditReport& report) {
  const std::vector<Benchmark> benchmarks = benchmarks_present(report);
  CellLookup lookup(report);

  // Rows: Orig. first, then single-technique conditions sorted by label
  // (the published row order is alphabetical by abbreviation).
  std::map<std::string, std::pair<std::string, std::string>> rows;  // label+key -> (label, key)
  std::map<std::string, std::string> orig_keys;                     // variant-aware Orig. keys
  bool any_missing = false;
  for (const auto& cell : report.cells) {
    if (cell.condition.is_original()) {
      orig_keys.emplace(cell.condition.key(), cell.condition.key());
    } else if (cell.condition.techniques.size() == 1) {
      rows.emplace(cell.condition.label() + "\x1f" + cell.condition.key(),
                   std::make_pair(cell.condition.label(), cell.condition.key()));
    }
  }
  std::ostringstream out;
  for (const auto& judge : report.meta.judges) {
    out << "## Judge: " << judge << "\n\n";
    std::vector<std::string> header = {"Bias"};
    for (Benchmark b : benchmarks) header.push_back(benchmark_name(b));
    out << markdown_row(header) << "\n" << markdown_rule(header.size()) << "\n";

    for (const auto& [ok, orig_key] : orig_keys) {
      std::vector<std::string> orig_row = {std::string(kOriginalLabel)};
      for (Benchmark b : benchmarks) {
        auto it = lookup.cells.find({judge, orig_key, b});
        if (it == lookup.cells.end()) {
          orig_row.push_back("—");
          any_missing = true;
        } else {
          orig_row.push_back(fixed(it->second->mean, 2));
        }
      }
      out << markdown_row(orig_row) << "\n";
    }

    for (const auto& [sort_key, row_id] : rows) {
      const auto& [label, key] = row_id;
      std::vector<std::string> row = {label};
      for (Benchmark b : benchmarks) {
        auto it = lookup.deltas.find({judge, key, b});
        if (it == lookup.deltas.end()) {
          row.push_back("—");
          any_missing = true;
        } else {
          const DeltaRecord& d = *it->second;
          row.push_back(delta_cell(d.biased_mean, d.rel_change, d.success));
        }
      }
      out << markdown_row(row) << "\n";
    }
    out << "\n";
  }
  if (any_missing || report.dropped_cells > 0) {
    out << "— = no valid trials for this cell.\n\n";
  }
  return out.str();
}

std::string render_stacking_table(const AuditReport& report, int top_k) {
  // Rank stacked (two-technique) conditions by mean relative delta across
  // benchmarks; ties break lexicographically by pair label.
  std::map<std::string, std::vector<const DeltaRecord*>> by_label;
  std::map<std::string, std::string> label_keys;
  Condition orig_condition{};
  for (const auto& delta : report.deltas) {
    if (delta.condition.techniques.size() == 2) {
      by_label[delta.condition.label()].push_back(&delta);
      label_keys.emplace(delta.condition.label(), delta.condition.key());
      orig_condition = Condition{{}, delta.condition.variant, delta.condition.placement};
    }
  }
  if (by_label.empty()) {
    throw std::runtime_error("render_stacking_table: no stacked condition records");
  }
  struct Ranked {
    std::string label;
    double mean_delta;
  };
  std::vector<Ranked> ranked;
  for (const auto& [label, group] : by_label) {
    double sum = 0.0;
    for (const auto* d : group) sum += d->rel_change;
    ranked.push_back(Ranked{label, sum / static_cast<double>(group.size())});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.mean_delta != b.mean_delta) return a.mean_delta > b.mean_delta;
    return a.label < b.label;
  });
  if (top_k > 0 && static_cast<int>(ranked.size()) > top_k) ranked.resize(top_k);

  const std::vector<Benchmark> benchmarks = benchmarks_present(report);
  CellLookup lookup(report);
  std::ostringstream out;
  for (const auto& judge : report.meta.judges) {
    out << "## Stacked techniques (top " << ranked.size() << " of " << by_label.size()
        << "): " << judge << "\n\n";
    std::vector<std::string> header = {"Method"};
    for (Benchmark b : benchmarks) header.push_back(benchmark_name(b));
    out << markdown_row(header) << "\n" << markdown_rule(header.size()) << "\n";
    std::vector<std::string> orig_row = {std::string(kOriginalLabel)};
    for (Benchmark b : benchmarks) {
      auto it = lookup.cells.find({judge, orig_condition.key(), b});
      orig_row.push_back(it == lookup.cells.end() ? "—" : fixed(it->second->mean, 2));
    }
    out << markdown_row(orig_row) << "\n";
    for (const auto& r : ranked) {
      std::vector<std::string> row = {r.label};
      for (Benchmark b : benchmarks) {
        auto it = lookup.deltas.find({judge, label_keys.at(r.label), b});
        if (it == lookup.deltas.end()) {
          row.push_back("—");
        } else {
          const DeltaRecord& d = *it->second;
          row.push_back(delta_cell(d.biased_mean, d.rel_change, d.success));
        }
      }
      out << markdown_row(row) << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string render_pairwise_table(const AuditReport& report) {
  std::ostringstream out;
  bool any_dropped = false;
  for (const auto& judge : report.meta.judges) {
    out << "## Pairwise comparison (cues on A only): " << judge << "\n\n";
    out << markdown_row({"Methods", "A Win (%)", "B Win (%)", "Tie (%)", "Pairs"}) << "\n"
        << markdown_rule(5) << "\n";
    // Orig. row first, then labels sorted.
    std::vector<const PairwiseReportRow*> rows;
    for (const auto& row : report.pairwise_rows) {
      if (row.judge == judge) rows.push_back(&row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const PairwiseReportRow* a, const PairwiseReportRow* b) {
                const bool ao = a->condition_on_a.is_original();
                const bool bo = b->condition_on_a.is_original();
                if (ao != bo) return ao;
                return a->condition_on_a.label() < b->condition_on_a.label();
              });
    for (const auto* row : rows) {
      std::string pairs = std::to_string(row->percentages.pairs);
      if (row->dropped_pairs > 0) {
        pairs += " (" + std::to_string(row->dropped_pairs) + " dropped)";
        any_dropped = true;
      }
      out << markdown_row({row->condition_on_a.label(), fixed(row->percentages.a_pct(), 1),
                           fixed(row->percentages.b_pct(), 1),
                           fixed(row->percentages.tie_pct(), 1), pairs})
          << "\n";
    }
    out << "\n";
  }
  if (any_dropped) out << "Dropped pairs had an invalid verdict in at least one order.\n\n";
  return out.str();
}

std::string render_mitigation_summary(
    const std::vector<DeltaRecord>& baseline,
    const std::map<std::string, std::vector<DeltaRecord>>& variants) {
  auto mean_by_label = [](const std::vector<DeltaRecord>& deltas) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& d : deltas) {
      auto& [sum, n] = acc[d.condition.label()];
      sum += d.rel_change;
      ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [label, sn] : acc) out[label] = sn.first / sn.second;
    return out;
  };

  const auto base = mean_by_label(baseline);
  std::vector<std::string> names;
  std::vector<std::map<std::string, double>> columns;
  for (const auto& [name, deltas] : variants) {
    auto m = mean_by_label(deltas);
    std::set<std::string> base_labels, variant_labels;
    for (const auto& [l, v] : base) base_labels.insert(l);
    for (const auto& [l, v] : m) variant_labels.insert(l);
    if (base_labels != variant_labels) {
      throw std::runtime_error("render_mitigation_summary: variant \"" + name +
                               "\" covers different conditions than the baseline");
    }
    names.push_back(name);
    columns.push_back(std::move(m));
  }

  std::ostringstream out;
  out << "## Mitigation variants (mean delta across benchmarks, %)\n\n";
  std::vector<std::string> header = {"Bias", "Baseline"};
  for (const auto& name : names) header.push_back(name);
  out << markdown_row(header) << "\n" << markdown_rule(header.size()) << "\n";
  for (const auto& [label, value] : base) {
    std::vector<std::string> row = {label, signed_fixed(value, 1)};
    for (const auto& column : columns) row.push_back(signed_fixed(column.at(label), 1));
    out << markdown_row(row) << "\n";
  }
  out << "\n";
  for (const std::string variant : {"DirectMitigation", "ChainOfThought"}) {
    if (std::find(names.begin(), names.end(), variant) == names.end()) {
      out << "Column " << variant << " omitted: no audit records supplied.\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// serialization

json AuditReport::to_json() const {
  json node;
  node["meta"] = {
      {"judges", meta.judges},
      {"protocol", meta.protocol},
      {"corpus_digest", meta.corpus_digest},
      {"bank_digest", meta.bank_digest},
      {"prompt_digest", meta.prompt_digest},
      {"config_digest", meta.config_digest},
      {"seed", meta.seed},
      {"stacking_rank_metric", meta.stacking_rank_metric},
  };
  node["dropped_cells"] = dropped_cells;
  json cells_node = json::array();
  for (const auto& cell : cells) {
    json c = cell.condition.to_json();
    c["judge"] = cell.judge;
    c["benchmark"] = benchmark_name(cell.benchmark);
    c["mean"] = cell.mean;
    c["support"] = cell.support;
    c["items"] = cell.items;
    cells_node.push_back(std::move(c));
  }
  node["cells"] = cells_node;
  json deltas_node = json::array();
  for (const auto& delta : deltas) {
    json d = delta.condition.to_json();
    d["judge"] = delta.judge;
    d["benchmark"] = benchmark_name(delta.benchmark);
    d["orig_mean"] = delta.orig_mean;
    d["biased_mean"] = delta.biased_mean;
    d["rel_change"] = delta.rel_change;
    d["success"] = delta.success;
    d["support"] = delta.support;
    deltas_node.push_back(std::move(d));
  }
  node["deltas"] = deltas_node;
  json pairwise_node = json::array();
  for (const auto& row : pairwise_rows) {
    json p = row.condition_on_a.to_json();
    p["judge"] = row.judge;
    p["a_halfwins"] = row.percentages.a_halfwins;
    p["b_halfwins"] = row.percentages.b_halfwins;
    p["tie_halfwins"] = row.percentages.tie_halfwins;
    p["pairs"] = row.percentages.pairs;
    p["dropped_pairs"] = row.dropped_pairs;
    pairwise_node.push_back(std::move(p));
  }
  node["pairwise"] = pairwise_node;
  return node;
}

AuditReport AuditReport::from_json(const json& node) {
  AuditReport report;
  const json& meta = node.at("meta");
  report.meta.judges = meta.at("judges").get<std::vector<std::string>>();
  report.meta.protocol = meta.at("protocol").get<std::string>();
  report.meta.corpus_digest = meta.at("corpus_digest").get<std::string>();
  report.meta.bank_digest = meta.at("bank_digest").get<std::string>();
  report.meta.prompt_digest = meta.at("prompt_digest").get<std::string>();
  report.meta.config_digest = meta.at("config_digest").get<std::string>();
  report.meta.seed = meta.at("seed").get<std::uint64_t>();
  report.meta.stacking_rank_metric = meta.at("stacking_rank_metric").get<std::string>();
  report.dropped_cells = node.at("dropped_cells").get<int>();
  for (const auto& c : node.at("cells")) {
    CellMean cell;
    cell.judge = c.at("judge").get<std::string>();
    cell.benchmark = parse_benchmark(c.at("benchmark").get<std::string>());
    cell.condition = Condition::from_json(c, "report cell");
    cell.mean = c.at("mean").get<double>();
    cell.support = c.at("support").get<int>();
    cell.items = c.at("items").get<int>();
    report.cells.push_back(std::move(cell));
  }
  for (const auto& d : node.at("deltas")) {
    DeltaRecord delta;
    delta.judge = d.at("judge").get<std::string>();
    delta.benchmark = parse_benchmark(d.at("benchmark").get<std::string>());
    delta.condition = Condition::from_json(d, "report delta");
    delta.orig_mean = d.at("orig_mean").get<double>();
    delta.biased_mean = d.at("biased_mean").get<double>();
    delta.rel_change = d.at("rel_change").get<double>();
    delta.success = d.at("success").get<bool>();
    delta.support = d.at("support").get<int>();
    report.deltas.push_back(std::move(delta));
  }
  for (const auto& p : node.at("pairwise")) {
    PairwiseReportRow row;
    row.judge = p.value("judge", "");
    row.condition_on_a = Condition::from_json(p, "report pairwise row");
    row.percentages.a_halfwins = p.at("a_halfwins").get<long>();
    row.percentages.b_halfwins = p.at("b_halfwins").get<long>();
    row.percentages.tie_halfwins = p.at("tie_halfwins").get<long>();
    row.percentages.pairs = p.at("pairs").get<long>();
    row.dropped_pairs = p.at("dropped_pairs").get<int>();
    report.pairwise_rows.push_back(std::move(row));
  }
  report.technique_rollup = technique_summaries(report.deltas);
  report.model_rollup = model_summaries(report.deltas);
  return report;
}

std::string report_markdown(const AuditReport& report) {
  std::ostringstream out;
  out << "# Persuasion bias audit\n\n";
  out << "protocol: " << report.meta.protocol << "  \n";
  out << "judges: " << join(report.meta.judges, ", ") << "  \n";
  out << "corpus digest: " << report.meta.corpus_digest << "  \n";
  out << "bank digest: " << report.meta.bank_digest << "  \n";
  out << "prompt digest: " << report.meta.prompt_digest << "  \n";
  out << "config digest: " << report.meta.config_digest << "  \n";
  out << "seed: " << report.meta.seed << "  \n";
  if (!report.pairwise_rows.empty()) {
    out << "\n" << render_pairwise_table(report);
  }
  if (!report.cells.empty()) {
    out << "\n" << render_main_table(report);
    bool any_stacked = false;
    for (const auto& d : report.deltas) any_stacked |= d.condition.techniques.size() == 2;
    if (any_stacked) {
      out << "stacking rank metric: " << report.meta.stacking_rank_metric << "\n\n";
      out << render_stacking_table(report, 10);
    }
    if (!report.technique_rollup.empty()) {
      out << "## Per-technique summary\n\n";
      out << markdown_row({"Bias", "Cases", "Successes", "Success rate",
                           "Mean delta on success (%)"})
          << "\n"
          << markdown_rule(5) << "\n";
      for (const auto& s : report.technique_rollup) {
        out << markdown_row({s.condition_label, std::to_string(s.cases),
                             std::to_string(s.successes), fixed(s.success_rate * 100.0, 1) + "%",
                             s.mean_delta_on_success ? signed_fixed(*s.mean_delta_on_success, 2)
                                                     : std::string("—")})
            << "\n";
      }
      out << "\n";
      out << "## Per-judge summary\n\n";
      out << markdown_row({"Judge", "Cases", "Successes", "Mean delta on success (%)"}) << "\n"
          << markdown_rule(4) << "\n";
      for (const auto& s : report.model_rollup) {
        out << markdown_row({s.judge, std::to_string(s.cases), std::to_string(s.successes),
                             s.mean_delta_on_success ? signed_fixed(*s.mean_delta_on_success, 2)
                                                     : std::string("—")})
            << "\n";
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string report_csv(const AuditReport& report) {
  std::ostringstream out;
  auto csv_escape = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string escaped = "\"";
    for (char c : s) {
      if (c == '"') escaped += "\"\"";
      else escaped.push_back(c);
    }
    escaped += "\"";
    return escaped;
  };
  if (!report.pairwise_rows.empty()) {
    out << "judge,condition,a_win_pct,b_win_pct,tie_pct,pairs,a_halfwins,b_halfwins,tie_halfwins,"
           "dropped_pairs\n";
    for (const auto& row : report.pairwise_rows) {
      out << csv_escape(row.judge) << "," << csv_escape(row.condition_on_a.label()) << ","
          << format_double(row.percentages.a_pct()) << "," << format_double(row.percentages.b_pct())
          << "," << format_double(row.percentages.tie_pct()) << "," << row.percentages.pairs << ","
          << row.percentages.a_halfwins << "," << row.percentages.b_halfwins << ","
          << row.percentages.tie_halfwins << "," << row.dropped_pairs << "\n";
    }
    return out.str();
  }
  out << "judge,benchmark,condition,variant,placement,mean,support,items,orig_mean,rel_change_pct,"
         "success\n";
  CellLookup lookup(report);
  for (const auto& cell : report.cells) {
    out << csv_escape(cell.judge) << "," << benchmark_name(cell.benchmark) << ","
        << csv_escape(cell.condition.label()) << "," << prompt_variant_name(cell.condition.variant)
        << "," << placement_name(cell.condition.placement) << "," << format_double(cell.mean) << ","
        << cell.support << "," << cell.items;
    auto it = lookup.deltas.find({cell.judge, cell.condition.key(), cell.benchmark});
    if (it != lookup.deltas.end()) {
      out << "," << format_double(it->second->orig_mean) << ","
          << format_double(it->second->rel_change) << "," << (it->second->success ? "1" : "0");
    } else {
      out << ",,,";
    }
    out << "\n";
  }
  return out.str();
}

ExportFormat parse_export_format(const std::string& name) {
  if (name == "markdown") return ExportFormat::markdown;
  if (name == "csv") return ExportFormat::csv;
  if (name == "structured" || name == "json") return ExportFormat::structured;
  throw std::runtime_error("unknown export format \"" + name + "\"");
}

std::filesystem::path export_report(const AuditReport& report, ExportFormat format,
                                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  switch (format) {
    case ExportFormat::markdown: {
      const auto path = out_dir / "report.md";
      write_text_atomic(path, report_markdown(report));
      return path;
    }
    case ExportFormat::csv: {
      const auto path = out_dir / "report.csv";
      write_text_atomic(path, report_csv(report));
      return path;
    }
    case ExportFormat::structured: {
      const auto path = out_dir / "report.json";
      write_text_atomic(path, report.to_json().dump(2) + "\n");
      return path;
    }
  }
  throw std::logic_error("export_report: bad format");
}

}  // namespace judgeaudit
