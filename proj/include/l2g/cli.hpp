// Copyright 2026 The L2G Retrieval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The `l2g` command-line driver. Lives in a header so tests can call
// run() in-process.
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage error,
// 10 + ErrorCode for library errors (see exit_code()).
//
// Query options resolve as flag > --config JSON > built-in default. Config
// keys are the long flag names without dashes, e.g. {"k-mds": 600}.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "l2g/chamfer.hpp"
#include "l2g/common.hpp"
#include "l2g/eval.hpp"
#include "l2g/feature_store.hpp"
#include "l2g/local_index.hpp"
#include "l2g/mds.hpp"
#include "l2g/rerank.hpp"
#include "l2g/synth.hpp"

namespace l2g::cli {

inline constexpr int kUsageError = 2;

inline int exit_code(ErrorCode code) { return 10 + static_cast<int>(code); }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Query options.

struct QueryOptions {
  std::string rerank_mode = "mds+sg";
  std::size_t k_mds = 700;
  std::size_t M = 1600;
  std::size_t sg_k = 6;
  double beta = 0.31;
  double w = 0.19;
  double power = 0.01;
  double eps = 0.1;
  std::size_t dim = 128;
  std::string mds_mode = "metric";
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  std::size_t search_depth = 0;
  bool no_sg_refinement = false;
  std::string local_source = "embedding";
};

inline RerankMode parse_rerank_mode(const std::string& name) {
  if (name == "none") return RerankMode::kNone;
  if (name == "mds") return RerankMode::kMdsOnly;
  if (name == "sg") return RerankMode::kSgOnly;
  if (name == "mds+sg") return RerankMode::kMdsPlusSg;
  fail(ErrorCode::kInvalidArgument, "unknown rerank mode '" + name + "'");
}

inline RerankConfig to_config(const QueryOptions& o) {
  RerankConfig c;
  c.mode = parse_rerank_mode(o.rerank_mode);
  c.k_mds = o.k_mds;
  c.M = o.M;
  c.sg_k = o.sg_k;
  c.beta = o.beta;
  c.w = o.w;
  c.chamfer.power = o.power;
  c.mds.eps = o.eps;
  c.mds.dim = o.dim;
  c.mds.seed = o.seed;
  c.mds.max_iter = o.max_iter;
  if (o.mds_mode == "metric") {
    c.mds.mode = MdsMode::kMetric;
  } else if (o.mds_mode == "nonmetric") {
    c.mds.mode = MdsMode::kNonmetric;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown MDS mode '" + o.mds_mode + "'");
  }
  if (o.local_source == "embedding") {
    c.local_source = LocalScoreSource::kEmbedding;
  } else if (o.local_source == "similarity") {
    c.local_source = LocalScoreSource::kRawSimilarity;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown local source '" + o.local_source + "'");
  }
  c.sg_refinement = !o.no_sg_refinement;
  c.search_depth = o.search_depth;
  validate(c);
  return c;
}

// Binds every query option to a flag and a config key, and applies the
// precedence rule after parsing.
class QueryOptionSet {
 public:
  void add_to(CLI::App& app) {
    bind(app, "rerank-mode", &QueryOptions::rerank_mode, "none | mds | sg | mds+sg")
        ->check(CLI::IsMember({"none", "mds", "sg", "mds+sg"}));
    bind(app, "k-mds", &QueryOptions::k_mds, "candidates embedded by MDS");
    bind(app, "M", &QueryOptions::M, "candidates re-ranked");
    bind(app, "sg-k", &QueryOptions::sg_k, "neighbors used by refinement");
    bind(app, "beta", &QueryOptions::beta, "query expansion weight");
    bind(app, "w", &QueryOptions::w, "weight of the MDS scores in the merge");
    bind(app, "power", &QueryOptions::power, "Chamfer power p in d = (1 - s)^p");
    bind(app, "eps", &QueryOptions::eps, "SMACOF relative stress tolerance");
    bind(app, "dim", &QueryOptions::dim, "MDS embedding dimension");
    bind(app, "mds-mode", &QueryOptions::mds_mode, "metric | nonmetric")
        ->check(CLI::IsMember({"metric", "nonmetric"}));
    bind(app, "seed", &QueryOptions::seed, "MDS seed");
    bind(app, "max-iter", &QueryOptions::max_iter, "SMACOF iteration cap");
    bind(app, "search-depth", &QueryOptions::search_depth, "shortlist length, 0 = whole database");
    bind(app, "local-source", &QueryOptions::local_source, "embedding | similarity")
        ->check(CLI::IsMember({"embedding", "similarity"}));
    auto* flag = app.add_flag("--no-sg-refinement", flags_.no_sg_refinement,
                              "disable neighbor refinement and query expansion");
    bindings_.push_back({"no-sg-refinement", flag,
                         [](QueryOptions& d, const QueryOptions& s) { d.no_sg_refinement = s.no_sg_refinement; },
                         [](QueryOptions& d, const nlohmann::json& j) { d.no_sg_refinement = j.get<bool>(); }});
    app.add_option("--config", config_path_, "JSON file of option defaults");
  }

  QueryOptions resolve() const {
    QueryOptions out;
    if (!config_path_.empty()) {
      const nlohmann::json doc = read_json(config_path_);
      if (!doc.is_object()) fail(ErrorCode::kSchemaViolation, config_path_ + ": config must be an object");
      for (const auto& [key, value] : doc.items()) {
        const Binding* binding = find(key);
        if (!binding) fail(ErrorCode::kSchemaViolation, config_path_ + ": unknown key '" + key + "'");
        try {
          binding->from_json(out, value);
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorCode::kSchemaViolation, config_path_ + ": bad value for '" + key + "': " + e.what());
        }
      }
    }
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) b.copy(out, flags_);
    }
    return out;
  }

 private:
  struct Binding {
    std::string key;
    CLI::Option* option;
    std::function<void(QueryOptions&, const QueryOptions&)> copy;
    std::function<void(QueryOptions&, const nlohmann::json&)> from_json;
  };

  template <typename T>
  CLI::Option* bind(CLI::App& app, const std::string& key, T QueryOptions::*member, const std::string& help) {
    auto* option = app.add_option("--" + key, flags_.*member, help)->capture_default_str();
    bindings_.push_back({key, option,
                         [member](QueryOptions& d, const QueryOptions& s) { d.*member = s.*member; },
                         [member](QueryOptions& d, const nlohmann::json& j) { d.*member = j.get<T>(); }});
    return option;
  }

  const Binding* find(const std::string& key) const {
    for (const auto& b : bindings_) {
      if (b.key == key) return &b;
    }
    return nullptr;
  }

  QueryOptions flags_;
  std::vector<Binding> bindings_;
  std::string config_path_;
};

inline nlohmann::json options_to_json(const QueryOptions& o) {
  return {{"rerank-mode", o.rerank_mode}, {"k-mds", o.k_mds},         {"M", o.M},
          {"sg-k", o.sg_k},               {"beta", o.beta},           {"w", o.w},
          {"power", o.power},             {"eps", o.eps},             {"dim", o.dim},
          {"mds-mode", o.mds_mode},       {"seed", o.seed},           {"max-iter", o.max_iter},
          {"search-depth", o.search_depth}, {"no-sg-refinement", o.no_sg_refinement},
          {"local-source", o.local_source}};
}

// ---------------------------------------------------------------------------
// Inputs shared by query, ablate and sweep.

struct InputPaths {
  std::string index;
  std::string sparse;
  std::string queries;
  std::vector<std::string> globals;
  std::string similarity;
  double sparse_power = 0.01;
  std::size_t threads = 0;

  void add_to(CLI::App& app) {
    app.add_option("--index", index, "L2GI index file")->required();
    app.add_option("--sparse", sparse, "L2GD neighbor table")->required();
    app.add_option("--queries", queries, "L2GF query features")->required();
    app.add_option("--globals", globals, "L2GG files covering database and query ids");
    app.add_option("--similarity", similarity, "L2GS pairwise similarities replacing Chamfer");
    app.add_option("--sparse-power", sparse_power, "Chamfer power the neighbor table was built with")
        ->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0: L2G_THREADS or all cores)");
  }
};

struct QueryInputs {
  std::shared_ptr<LocalIndex> index;
  SparseDistances sparse;  // at sparse_power
  double sparse_power = 0.01;
  FeatureCollection queries;
  std::optional<DescriptorMatrix> db_globals;
  DescriptorMatrix query_globals;
  std::optional<ExternalSimilarity> external;
  std::size_t threads = 0;

  const FeatureCollection& database() const { return index->database(); }
};

inline QueryInputs load_inputs(const InputPaths& paths) {
  QueryInputs in;
  in.index = std::make_shared<LocalIndex>(load_index(paths.index));
  in.sparse = load_sparse(paths.sparse);
  in.sparse_power = paths.sparse_power;
  in.queries = load_collection(paths.queries, LoadOptions{0});
  in.threads = paths.threads;
  require(in.sparse.size() == in.index->size(), ErrorCode::kDimensionMismatch,
          "neighbor table covers " + std::to_string(in.sparse.size()) + " images, index has " +
              std::to_string(in.index->size()));
  if (!paths.globals.empty()) {
    const GlobalFeatureStore store = load_global_files(paths.globals);
    in.db_globals = store.aligned_to(in.database());
    in.query_globals = store.aligned_to(in.queries);
  }
  if (!paths.similarity.empty()) in.external = load_external_similarity(paths.similarity);
  return in;
}

inline std::vector<RerankResult> run_queries(const QueryInputs& in, const RerankConfig& config) {
  const SparseDistances sparse = with_power(in.sparse, in.sparse_power, config.chamfer.power);
  std::vector<RerankResult> results(in.queries.size());
  parallel_for(in.queries.size(), in.threads, [&](std::size_t q) {
    std::optional<GlobalInputs> globals;
    if (in.db_globals) globals = GlobalInputs{&*in.db_globals, in.query_globals.row(static_cast<Eigen::Index>(q)).transpose()};
    const GlobalInputs* g = globals ? &*globals : nullptr;
    if (in.external) {
      const auto source = static_cast<std::uint32_t>(in.index->size() + q);
      results[q] = l2g_query(*in.external, source, in.index->size(), sparse, g, config);
    } else {
      results[q] = l2g_query(*in.index, sparse, in.queries[q], g, config);
    }
  });
  return results;
}

inline std::vector<std::vector<std::uint32_t>> ordinals_of(const std::vector<RerankResult>& results) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.ranking.ordinals());
  return out;
}

inline GroundTruth load_aligned_ground_truth(const std::string& path, const QueryInputs& in) {
  const GroundTruth gt = ground_truth_from_json(read_json(path), in.database(), path);
  std::vector<std::string> ids;
  for (const auto& q : in.queries) ids.push_back(q.image_id);
  return align_ground_truth(gt, ids);
}

// ---------------------------------------------------------------------------
// Output helpers.

inline void emit(const nlohmann::json& doc, const std::string& path, std::ostream& out, int indent = 2) {
  const std::string text = doc.dump(indent) + "\n";
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  auto file = io::open_output(path);
  file << text;
  file.flush();
  if (!file) fail(ErrorCode::kIoFailure, "write to " + path + " failed");
}

inline nlohmann::json map_pair(const std::vector<std::vector<std::uint32_t>>& rankings, const GroundTruth& gt) {
  const double medium = mean_ap(rankings, gt, Protocol::kMedium);
  const double hard = mean_ap(rankings, gt, Protocol::kHard);
  return {{"medium", round1(medium)}, {"hard", round1(hard)}, {"medium_exact", medium}, {"hard_exact", hard}};
}

// ---------------------------------------------------------------------------
// Commands.

struct BuildIndexArgs {
  std::vector<std::string> features;
  std::string manifest;
  std::string mode = "exact";
  std::string out;
  std::uint64_t seed = 7;
  std::size_t max_descriptors = kDefaultMaxDescriptors;
  std::size_t centers = 0;
  std::size_t probes = 8;
};

inline int cmd_build_index(const BuildIndexArgs& a, std::ostream& out) {
  if (a.features.empty() && a.manifest.empty()) throw UsageError("--features is required");
  const LoadOptions options{a.max_descriptors};
  FeatureCollection db;
  if (!a.manifest.empty()) {
    db = load_database(load_manifest(a.manifest), options);
  } else {
    for (const auto& p : a.features) db.append(load_collection(p, options));
  }
  ApproxParams params;
  params.seed = a.seed;
  params.num_centers = a.centers;
  params.probes = a.probes;
  const IndexMode mode = a.mode == "approx" ? IndexMode::kApproximate : IndexMode::kExact;
  const LocalIndex index = build_index(db, mode, params);
  save_index(index, a.out);
  emit({{"index", a.out}, {"images", index.size()}, {"mode", a.mode},
        {"centers", static_cast<std::size_t>(index.codebook().rows())}},
       "", out);
  return 0;
}

struct SparseArgs {
  std::string index;
  std::string similarity;
  std::size_t k_nn = 700;
  double power = 0.01;
  std::string out;
  std::size_t threads = 0;
};

inline int cmd_sparse(const SparseArgs& a, std::ostream& out) {
  const LocalIndex index = load_index(a.index);
  const ChamferParams params{a.power};
  const SparseDistances sparse =
      a.similarity.empty()
          ? precompute_sparse_distances(index, a.k_nn, params, a.threads)
          : precompute_sparse_distances(load_external_similarity(a.similarity), index.size(), a.k_nn, params);
  save_sparse(sparse, a.out);
  emit({{"sparse", a.out}, {"images", sparse.size()}, {"k_nn", sparse.k_nn()}, {"power", a.power}}, "", out);
  return 0;
}

struct QueryArgs {
  InputPaths inputs;
  QueryOptionSet options;
  std::string out;
  std::size_t top = 0;
  bool no_timing = false;
};

inline int cmd_query(const QueryArgs& a, std::ostream& out) {
  const QueryOptions options = a.options.resolve();
  const RerankConfig config = to_config(options);
  const QueryInputs in = load_inputs(a.inputs);
  const auto results = run_queries(in, config);
  nlohmann::json queries = nlohmann::json::array();
  for (std::size_t q = 0; q < results.size(); ++q) {
    const auto& r = results[q];
    const std::size_t count = a.top == 0 ? r.ranking.size() : std::min(a.top, r.ranking.size());
    nlohmann::json ids = nlohmann::json::array();
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i) {
      ids.push_back(in.database()[r.ranking.items[i].ordinal].image_id);
      scores.push_back(r.ranking.items[i].score);
    }
    nlohmann::json entry = {{"id", in.queries[q].image_id}, {"ids", ids}, {"scores", scores},
                            {"mds_iterations", r.mds_iterations}};
    if (!a.no_timing) {
      entry["timing_ms"] = {{"search", r.timing.search_ms}, {"mds", r.timing.mds_ms}, {"rerank", r.timing.rerank_ms}};
    }
    queries.push_back(std::move(entry));
  }
  emit({{"schema", "l2g.rankings/1"}, {"config", options_to_json(options)}, {"queries", queries}}, a.out, out, -1);
  return 0;
}

struct LoadedRankings {
  std::vector<std::string> query_ids;
  std::vector<std::vector<std::string>> ids;
};

inline LoadedRankings load_rankings(const std::string& path) {
  const nlohmann::json doc = read_json(path);
  if (!doc.is_object() || !doc.contains("queries") || !doc.at("queries").is_array()) {
    fail(ErrorCode::kSchemaViolation, path + ": expected an object with a 'queries' array");
  }
  LoadedRankings out;
  for (const auto& q : doc.at("queries")) {
    if (!q.is_object() || !q.contains("id") || !q.at("id").is_string() || !q.contains("ids") ||
        !q.at("ids").is_array()) {
      fail(ErrorCode::kSchemaViolation, path + ": every query needs 'id' and 'ids'");
    }
    out.query_ids.push_back(q.at("id").get<std::string>());
    std::vector<std::string> ids;
    for (const auto& id : q.at("ids")) {
      if (!id.is_string()) fail(ErrorCode::kSchemaViolation, path + ": ranking ids must be strings");
      ids.push_back(id.get<std::string>());
    }
    out.ids.push_back(std::move(ids));
  }
  return out;
}

struct EvalArgs {
  std::string rankings;
  std::string gt;
  std::string protocol = "both";
  std::size_t recall_kmax = 1600;
  std::string out;
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedRankings loaded = load_rankings(a.rankings);
  std::unordered_map<std::string, std::uint32_t> interned;
  const auto ordinal_of = [&](const std::string& id) {
    return interned.emplace(id, static_cast<std::uint32_t>(interned.size())).first->second;
  };
  const GroundTruth gt = align_ground_truth(ground_truth_from_json(read_json(a.gt), ordinal_of, a.gt),
                                            loaded.query_ids);
  std::vector<std::vector<std::uint32_t>> rankings;
  for (const auto& ids : loaded.ids) {
    std::vector<std::uint32_t> r;
    r.reserve(ids.size());
    for (const auto& id : ids) r.push_back(ordinal_of(id));
    rankings.push_back(std::move(r));
  }
  std::vector<Protocol> protocols;
  if (a.protocol == "medium" || a.protocol == "both") protocols.push_back(Protocol::kMedium);
  if (a.protocol == "hard" || a.protocol == "both") protocols.push_back(Protocol::kHard);

  nlohmann::json report = nlohmann::json::object();
  for (Protocol p : protocols) {
    const MapResult m = evaluate_map(rankings, gt, p);
    nlohmann::json per_query = nlohmann::json::array();
    for (std::size_t q = 0; q < m.per_query.size(); ++q) {
      per_query.push_back({{"id", gt.query_ids[q]},
                           {"ap", m.per_query[q] ? nlohmann::json(*m.per_query[q]) : nlohmann::json(nullptr)}});
    }
    nlohmann::json ks = nlohmann::json::array();
    nlohmann::json found = nlohmann::json::array();
    for (const auto& [k, count] : recall_curve(rankings, gt, p, a.recall_kmax)) {
      ks.push_back(k);
      found.push_back(count);
    }
    report[std::string(protocol_name(p))] = {{"map", round1(m.map)},
                                             {"map_exact", m.map},
                                             {"evaluated", m.evaluated},
                                             {"per_query", per_query},
                                             {"recall", {{"k", ks}, {"positives", found}}}};
  }
  emit({{"schema", "l2g.metrics/1"}, {"protocols", report}}, a.out, out);
  return 0;
}

struct AblateArgs {
  InputPaths inputs;
  QueryOptionSet options;
  std::string gt;
  std::string plugin_similarity;
  std::string plugin_sparse;
  std::string out;
};

inline int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const QueryOptions options = a.options.resolve();
  const RerankConfig full = to_config(options);
  QueryInputs in = load_inputs(a.inputs);
  const GroundTruth gt = load_aligned_ground_truth(a.gt, in);

  struct Row {
    std::string name;
    RerankConfig config;
  };
  std::vector<Row> rows = {{"full", full}};
  rows.push_back({"no_sg_refinement", full});
  rows.back().config.sg_refinement = false;
  rows.push_back({"w_1", full});
  rows.back().config.w = 1.0;
  rows.push_back({"sg_on_raw_dissimilarities", full});
  rows.back().config.local_source = LocalScoreSource::kRawSimilarity;

  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json entry = map_pair(ordinals_of(run_queries(in, row.config)), gt);
    entry["name"] = row.name;
    table.push_back(std::move(entry));
  }
  if (!a.plugin_similarity.empty()) {
    if (a.plugin_sparse.empty()) throw UsageError("--plugin-sparse is required with --plugin-similarity");
    QueryInputs plugin = in;
    plugin.external = load_external_similarity(a.plugin_similarity);
    plugin.sparse = load_sparse(a.plugin_sparse);
    plugin.sparse_power = full.chamfer.power;
    nlohmann::json entry = map_pair(ordinals_of(run_queries(plugin, full)), gt);
    entry["name"] = "external_similarity";
    table.push_back(std::move(entry));
  }

  nlohmann::json reference = nlohmann::json::object();
  RerankConfig none = full;
  none.mode = RerankMode::kNone;
  reference["local_search"] = map_pair(ordinals_of(run_queries(in, none)), gt);
  if (in.db_globals) {
    std::vector<std::vector<std::uint32_t>> global;
    for (std::size_t q = 0; q < in.queries.size(); ++q) {
      global.push_back(global_search(*in.db_globals, in.query_globals.row(static_cast<Eigen::Index>(q)).transpose()).ordinals());
    }
    reference["global_search"] = map_pair(global, gt);
  }
  emit({{"schema", "l2g.ablation/1"}, {"config", options_to_json(options)}, {"rows", table}, {"reference", reference}},
       a.out, out);
  return 0;
}

struct SweepArgs {
  InputPaths inputs;
  QueryOptionSet options;
  std::string gt;
  std::string param;
  std::vector<std::string> values;
  std::string out;
};

// Blank tokens are dropped; anything else must parse as a number.
inline std::vector<double> parse_sweep_values(const std::vector<std::string>& tokens) {
  std::vector<double> values;
  for (const auto& token : tokens) {
    if (token.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(value)) throw UsageError("bad sweep value '" + token + "'");
    values.push_back(value);
  }
  if (values.empty()) throw UsageError("--values needs at least one value");
  return values;
}

inline int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<double> values = parse_sweep_values(a.values);
  const QueryOptions base = a.options.resolve();
  QueryInputs in = load_inputs(a.inputs);
  const GroundTruth gt = load_aligned_ground_truth(a.gt, in);
  nlohmann::json rows = nlohmann::json::array();
  for (double value : values) {
    QueryOptions o = base;
    if (a.param == "k-mds") {
      o.k_mds = static_cast<std::size_t>(value);
    } else if (a.param == "M") {
      o.M = static_cast<std::size_t>(value);
    } else if (a.param == "w") {
      o.w = value;
    } else if (a.param == "power") {
      o.power = value;
    } else {
      o.eps = value;
    }
    nlohmann::json entry = map_pair(ordinals_of(run_queries(in, to_config(o))), gt);
    entry["value"] = value;
    rows.push_back(std::move(entry));
  }
  emit({{"schema", "l2g.sweep/1"}, {"param", a.param}, {"config", options_to_json(base)}, {"rows", rows}}, a.out, out);
  return 0;
}

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 42;
  std::size_t n_db = 2000;
  std::size_t n_queries = 50;
  std::size_t n_distractors = 1500;
};

inline int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const PartialMatchBenchmark bench = generate_partial_match_benchmark(a.seed, a.n_db, a.n_queries, a.n_distractors);
  const std::string manifest = write_benchmark(bench, a.out);
  emit({{"manifest", manifest},
        {"database", bench.n_db},
        {"distractors", bench.n_distractors},
        {"queries", bench.queries.size()},
        {"seed", a.seed}},
       "", out);
  return 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local-to-global image retrieval: index, search, re-rank, evaluate."};
  app.name("l2g");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  BuildIndexArgs build;
  auto* build_cmd = app.add_subcommand("build-index", "index database local features");
  build_cmd->add_option("--features", build.features, "L2GF files (database, then distractors)");
  build_cmd->add_option("--manifest", build.manifest, "dataset manifest instead of --features");
  build_cmd->add_option("--mode", build.mode, "exact | approx")->check(CLI::IsMember({"exact", "approx"}))->capture_default_str();
  build_cmd->add_option("--out", build.out, "L2GI output")->required();
  build_cmd->add_option("--seed", build.seed, "k-means seed")->capture_default_str();
  build_cmd->add_option("--max-descriptors", build.max_descriptors, "per-image cap at load, 0 = none")->capture_default_str();
  build_cmd->add_option("--centers", build.centers, "codebook size, 0 = automatic");
  build_cmd->add_option("--probes", build.probes, "centers probed per query descriptor")->capture_default_str();

  SparseArgs sparse;
  auto* sparse_cmd = app.add_subcommand("sparse", "precompute each database image's nearest neighbors");
  sparse_cmd->add_option("--index", sparse.index, "L2GI index")->required();
  sparse_cmd->add_option("--similarity", sparse.similarity, "L2GS similarities instead of Chamfer");
  sparse_cmd->add_option("--k-nn", sparse.k_nn, "neighbors per image")->capture_default_str();
  sparse_cmd->add_option("--power", sparse.power, "Chamfer power")->capture_default_str();
  sparse_cmd->add_option("--out", sparse.out, "L2GD output")->required();
  sparse_cmd->add_option("--threads", sparse.threads, "worker threads (0: L2G_THREADS or all cores)");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "search and re-rank every query");
  query.inputs.add_to(*query_cmd);
  query.options.add_to(*query_cmd);
  query_cmd->add_option("--out", query.out, "rankings JSON (default stdout)");
  query_cmd->add_option("--top", query.top, "entries kept per query, 0 = all");
  query_cmd->add_flag("--no-timing", query.no_timing, "omit per-query timings (byte-stable output)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "mAP and recall curves for a rankings file");
  eval_cmd->add_option("--rankings", eval.rankings, "rankings JSON")->required();
  eval_cmd->add_option("--gt", eval.gt, "ground truth JSON")->required();
  eval_cmd->add_option("--protocol", eval.protocol, "medium | hard | both")
      ->check(CLI::IsMember({"medium", "hard", "both"}))->capture_default_str();
  eval_cmd->add_option("--recall-kmax", eval.recall_kmax, "largest K of the recall curve")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "metrics JSON (default stdout)");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "mAP of the full model and its ablations");
  ablate.inputs.add_to(*ablate_cmd);
  ablate.options.add_to(*ablate_cmd);
  ablate_cmd->add_option("--gt", ablate.gt, "ground truth JSON")->required();
  ablate_cmd->add_option("--plugin-similarity", ablate.plugin_similarity, "L2GS similarities for an extra row");
  ablate_cmd->add_option("--plugin-sparse", ablate.plugin_sparse, "L2GD table built from --plugin-similarity");
  ablate_cmd->add_option("--out", ablate.out, "table JSON (default stdout)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "mAP as one parameter varies");
  sweep.inputs.add_to(*sweep_cmd);
  sweep.options.add_to(*sweep_cmd);
  sweep_cmd->add_option("--gt", sweep.gt, "ground truth JSON")->required();
  sweep_cmd->add_option("--param", sweep.param, "k-mds | M | w | power | eps")
      ->required()->check(CLI::IsMember({"k-mds", "M", "w", "power", "eps"}));
  sweep_cmd->add_option("--values", sweep.values, "comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", sweep.out, "curve JSON (default stdout)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic partial-match benchmark");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--n-db", synth.n_db)->capture_default_str();
  synth_cmd->add_option("--n-queries", synth.n_queries)->capture_default_str();
  synth_cmd->add_option("--n-distractors", synth.n_distractors)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*build_cmd) return cmd_build_index(build, out);
    if (*sparse_cmd) return cmd_sparse(sparse, out);
    if (*query_cmd) return cmd_query(query, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*ablate_cmd) return cmd_ablate(ablate, out);
    if (*sweep_cmd) return cmd_sweep(sweep, out);
    if (*synth_cmd) return cmd_synth(synth, out);
  } catch (const UsageError& e) {
    err << "l2g: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "l2g: error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "l2g: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}

}  // namespace l2g::cli
