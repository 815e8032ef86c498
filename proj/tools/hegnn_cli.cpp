// Experiment harness for the encrypted-inference library.
//
// Verbs:
//   run       one (graph, variant, params) cell -> JSON report + results.csv row
//   ablation  BFG / PO / AAO / FF on identical inputs and seed
//   sweep     pruning-ratio and/or activation-preset grid, optional --jobs
//   train     fit the bundled two-term GCN on a labeled graph, save weights
//   keygen    generate keys for a parameter set, save the decryption key
//   inspect   decrypt and print the logits referenced by a report
//
// Config file: JSON object, documented in the README. Reports are emitted
// with a fixed key order so identical configs and seeds produce identical
// bytes (wall-clock fields excepted).

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hegnn/hegnn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace hegnn;

namespace {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string id;
  he::HEParams params;
  std::string params_desc;  // preset name, file path, or "inline"
  std::string graph_path;
  std::string weights_path;          // empty if training inline
  std::optional<json> train;         // training section
  std::optional<std::vector<double>> thresholds;
  std::optional<double> ratio;
  std::string poly_desc;
  PolyActivationSet polys;
  Variant variant = Variant::kFF;
  EngineMode mode = EngineMode::kProtocol;
  std::string backend = "sim";
  MaskSource mask_source = MaskSource::kSoft;
  OnesMode ones = OnesMode::kEncrypted;
  he::PolyStrategy strategy = he::PolyStrategy::kHorner;
  int sharpen = 1;
  int uniform_degree = 0;
  double delta = 0.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool save_logits = true;
  bool save_key = true;
  bool trace = false;
  std::vector<double> sweep_ratios;
  std::vector<std::string> sweep_polys;
};

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

PolyActivationSet resolve_polys(const std::string& desc) {
  if (desc == "pset1" || desc == "pset2" || desc == "pset3") return preset_by_name(desc);
  return load_polyset(desc);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      out.push_back('-');
    }
  }
  return out;
}

std::string graph_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

RunConfig parse_config(const std::string& path) {
  const json j = parse_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
  RunConfig c;

  auto bad = [&](const std::string& field, const std::string& why) {
    return ConfigError("config." + field + ": " + why);
  };

  // Parameter set: inline object, params file path, or named preset.
  if (j.contains("he_params") && j.contains("preset")) {
    throw bad("he_params", "give either he_params or preset, not both");
  }
  if (j.contains("he_params")) {
    const auto& hp = j["he_params"];
    if (hp.is_string()) {
      c.params = he::load_params(hp.get<std::string>());
      c.params_desc = hp.get<std::string>();
    } else if (hp.is_object()) {
      try {
        c.params = hp.get<he::HEParams>();
      } catch (const json::exception& e) {
        throw bad("he_params", e.what());
      }
      c.params_desc = "inline";
    } else {
      throw bad("he_params", "expected an object or a params file path");
    }
  } else {
    const std::string preset = j.value("preset", std::string("desk"));
    if (preset == "desk") {
      c.params = he::desk_params();
    } else if (preset == "desk30") {
      c.params = he::desk_scale30_params();
    } else if (preset == "paper") {
      c.params = he::paper_params();
    } else {
      throw bad("preset", "unknown preset \"" + preset + "\" (expected desk|desk30|paper)");
    }
    c.params_desc = preset;
  }
  try {
    c.params.validate();
  } catch (const Error& e) {
    throw bad("he_params", e.what());
  }

  if (!j.contains("graph_path") || !j["graph_path"].is_string()) {
    throw bad("graph_path", "required string");
  }
  c.graph_path = j["graph_path"].get<std::string>();

  if (j.contains("weights_path")) c.weights_path = j["weights_path"].get<std::string>();
  if (j.contains("train")) {
    if (!j["train"].is_object()) throw bad("train", "expected an object");
    c.train = j["train"];
  }
  if (!c.weights_path.empty() && c.train) {
    throw bad("weights_path", "give either weights_path or a train section, not both");
  }

  if (j.contains("thresholds") && j.contains("pruning_ratio")) {
    throw bad("thresholds", "give either thresholds or pruning_ratio, not both");
  }
  if (j.contains("thresholds")) {
    try {
      c.thresholds = j["thresholds"].get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw bad("thresholds", e.what());
    }
  }
  if (j.contains("pruning_ratio")) {
    if (!j["pruning_ratio"].is_number()) throw bad("pruning_ratio", "expected a number");
    c.ratio = j["pruning_ratio"].get<double>();
  }

  if (j.contains("poly_preset") && j.contains("poly_file")) {
    throw bad("poly_preset", "give either poly_preset or poly_file, not both");
  }
  c.poly_desc = j.value("poly_preset", std::string("pset2"));
  if (j.contains("poly_file")) c.poly_desc = j["poly_file"].get<std::string>();
  try {
    c.polys = resolve_polys(c.poly_desc);
  } catch (const Error& e) {
    throw bad("poly_preset", e.what());
  }

  try {
    c.variant = variant_by_name(j.value("variant", std::string("FF")));
  } catch (const Error& e) {
    throw bad("variant", e.what());
  }

  const std::string mode = j.value("mode", std::string("protocol"));
  if (mode == "protocol") {
    c.mode = EngineMode::kProtocol;
  } else if (mode == "compaction") {
    c.mode = EngineMode::kCompaction;
  } else {
    throw bad("mode", "expected protocol|compaction");
  }

  c.backend = j.value("backend", std::string("sim"));
  if (c.backend != "sim" && c.backend != "ckks") throw bad("backend", "expected sim|ckks");

  const std::string source = j.value("mask_source", std::string("soft"));
  if (source == "soft") {
    c.mask_source = MaskSource::kSoft;
  } else if (source == "oracle") {
    c.mask_source = MaskSource::kOracle;
  } else {
    throw bad("mask_source", "expected soft|oracle");
  }

  const std::string ones = j.value("ones", std::string("encrypted"));
  if (ones == "encrypted") {
    c.ones = OnesMode::kEncrypted;
  } else if (ones == "plain") {
    c.ones = OnesMode::kPlain;
  } else {
    throw bad("ones", "expected encrypted|plain");
  }

  const std::string strategy = j.value("strategy", std::string("horner"));
  if (strategy == "horner") {
    c.strategy = he::PolyStrategy::kHorner;
  } else if (strategy == "ps") {
    c.strategy = he::PolyStrategy::kPatersonStockmeyer;
  } else {
    throw bad("strategy", "expected horner|ps");
  }

  c.sharpen = j.value("sharpen", 1);
  c.uniform_degree = j.value("uniform_degree", 0);
  c.delta = j.value("delta", 0.0);
  c.seed = j.value("seed", std::uint64_t{1});
  c.output_dir = j.value("output_dir", std::string("out"));
  c.save_logits = j.value("save_logits", true);
  c.save_key = j.value("save_keys", true);
  c.trace = j.value("trace", false);

  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (!s.is_object()) throw bad("sweep", "expected an object");
    if (s.contains("ratios")) c.sweep_ratios = s["ratios"].get<std::vector<double>>();
    if (s.contains("psets")) c.sweep_polys = s["psets"].get<std::vector<std::string>>();
  }

  c.id = j.value("id", std::string());
  if (c.id.empty()) {
    c.id = graph_stem(c.graph_path) + "-" + slug(variant_name(c.variant)) + "-" +
           (c.mode == EngineMode::kProtocol ? "prot" : "comp") + "-" + c.backend + "-s" +
           std::to_string(c.seed);
  }
  c.id = slug(c.id);
  return c;
}

// ---------------------------------------------------------------------------
// Engine plumbing
// ---------------------------------------------------------------------------

// Thresholds for this cell: explicit vector, or derived from the pruning
// ratio (band cuts at retained-degree quantiles). BFG needs none.
Thresholds resolve_thresholds(const RunConfig& c, const PlainGraph& g) {
  EngineConfig probe;
  probe.variant = c.variant;
  if (!probe.uses_masks()) return {};
  const std::size_t m = probe.adaptive() ? c.polys.m() : 1;
  if (c.thresholds) {
    Thresholds t{*c.thresholds};
    t.validate();
    return t;
  }
  if (c.ratio) return thresholds_for_ratio(g, *c.ratio, m);
  throw ConfigError("config.thresholds: variant " + std::string(variant_name(c.variant)) +
                    " needs thresholds or pruning_ratio");
}

EngineConfig engine_config(const RunConfig& c, const PlainGraph& g) {
  EngineConfig cfg;
  cfg.variant = c.variant;
  cfg.mode = c.mode;
  cfg.polys = c.polys;
  cfg.uniform_degree = c.uniform_degree;
  cfg.delta = c.delta;
  cfg.sharpen = c.sharpen;
  cfg.ones_mode = c.ones;
  cfg.strategy = c.strategy;
  cfg.mask_source = c.mask_source;
  cfg.tau = resolve_thresholds(c, g);
  if (cfg.uses_masks() && cfg.mask_source == MaskSource::kOracle) {
    cfg.oracle = oracle_masks(g, cfg.tau);
  }
  cfg.validate(g.n);
  return cfg;
}

std::vector<std::size_t> retained_nodes(const PlainGraph& g, const EngineConfig& cfg) {
  std::vector<std::size_t> out;
  if (cfg.prunes()) {
    const auto hard = oracle_masks(g, cfg.tau);
    for (std::size_t v = 0; v < g.n; ++v) {
      if (hard.m0[v] == 0.0) out.push_back(v);
    }
  } else {
    out.resize(g.n);
    for (std::size_t v = 0; v < g.n; ++v) out[v] = v;
  }
  return out;
}

struct CellResult {
  Matrix decrypted;                  // n x out_dim; zero rows for pruned nodes
  he::OpProfile profile;
  std::vector<StageLevel> trace;
  std::vector<StageProfile> stage_profiles;
  DepthPlan plan;
  double wall_ms = 0.0;
  std::vector<std::size_t> retained;
  double agreement = 0.0;
  double max_abs_err = 0.0;
  double test_accuracy = -1.0;
  std::vector<char> logits_blob;
  std::vector<char> key_blob;
};

template <class Backend>
void write_logits_blob(Backend& backend, he::BinaryWriter& w, EngineMode mode,
                       std::size_t n, std::size_t out_dim,
                       const std::vector<std::size_t>& nodes,
                       const std::vector<typename Backend::Ciphertext>& cts) {
  he::write_header(w, he::BlobKind::kCiphertextList);
  w.u8(mode == EngineMode::kProtocol ? 0 : 1);
  w.u64(n);
  w.u64(out_dim);
  w.u64(nodes.size());
  for (std::size_t v : nodes) w.u64(v);
  w.u64(cts.size());
  for (const auto& ct : cts) backend.serialize(ct, w);
}

template <class Backend>
void write_decrypt_key(const Backend& backend, const typename Backend::KeySet& keys,
                       he::BinaryWriter& w) {
  if constexpr (std::is_same_v<Backend, he::CkksBackend>) {
    typename Backend::KeySet sk_only;
    sk_only.secret = keys.secret;
    backend.serialize(sk_only, w);
  } else {
    backend.serialize(keys, w);
  }
}

template <class Backend>
CellResult run_cell(const RunConfig& rc, const PlainGraph& g, const ModelWeights& w) {
  CellResult out;
  const EngineConfig cfg = engine_config(rc, g);

  // Depth feasibility is settled before any key or ciphertext exists.
  out.plan = estimate_depth(cfg, w.layer_count(), rc.params.levels());
  check_depth_budget(cfg, w.layer_count(), rc.params.levels());

  const auto t0 = std::chrono::steady_clock::now();
  Backend backend(rc.params, rc.seed);
  auto keys = backend.keygen(he::rotation_steps_for_block(g.n, rc.params.slot_count()));

  if (cfg.mode == EngineMode::kProtocol) {
    auto enc = encrypt_graph(backend, g, keys);
    auto res = run_inference(backend, enc, w, cfg, keys);
    out.decrypted = decrypt_logits(backend, res.logits, g.n, keys);
    out.profile = res.profile;
    out.trace = std::move(res.trace);
    out.stage_profiles = std::move(res.stage_profiles);
    if (rc.save_logits) {
      he::BinaryWriter bw;
      write_logits_blob(backend, bw, cfg.mode, g.n, res.logits.cols.size(), {},
                        res.logits.cols);
      out.logits_blob = bw.bytes();
    }
  } else {
    auto res = run_compact_inference(backend, g, w, cfg, keys);
    out.decrypted = decrypt_compact_logits(backend, res, g.n, w.output_dim(), keys);
    out.profile = res.profile;
    out.trace = std::move(res.trace);
    out.stage_profiles = std::move(res.stage_profiles);
    if (rc.save_logits) {
      std::vector<typename Backend::Ciphertext> flat;
      for (const auto& row : res.logits) {
        for (const auto& ct : row) flat.push_back(ct);
      }
      he::BinaryWriter bw;
      write_logits_blob(backend, bw, cfg.mode, g.n, w.output_dim(), res.nodes, flat);
      out.logits_blob = bw.bytes();
    }
  }
  if (rc.save_key) {
    he::BinaryWriter bw;
    write_decrypt_key(backend, keys, bw);
    out.key_blob = bw.bytes();
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  // Plaintext reference: soft-mask mirror for protocol runs, hard-mask mirror
  // for compaction (band membership is decided by plain degrees there).
  EngineConfig ref = cfg;
  if (cfg.mode == EngineMode::kCompaction && cfg.uses_masks()) {
    ref.mask_source = MaskSource::kOracle;
    ref.oracle = oracle_masks(g, cfg.tau);
  }
  const auto design = forward_design_plain(g, w, ref);

  out.retained = retained_nodes(g, cfg);
  std::size_t hits = 0;
  for (std::size_t v : out.retained) {
    std::size_t a = 0, b = 0;
    for (std::size_t k = 1; k < out.decrypted[v].size(); ++k) {
      if (out.decrypted[v][k] > out.decrypted[v][a]) a = k;
      if (design.logits[v][k] > design.logits[v][b]) b = k;
    }
    hits += a == b;
    for (std::size_t k = 0; k < out.decrypted[v].size(); ++k) {
      out.max_abs_err =
          std::max(out.max_abs_err, std::abs(out.decrypted[v][k] - design.logits[v][k]));
    }
  }
  out.agreement =
      out.retained.empty() ? 1.0 : static_cast<double>(hits) / out.retained.size();

  if (!g.labels.empty() && !g.splits.test.empty()) {
    std::vector<std::size_t> test_retained;
    for (std::size_t v : g.splits.test) {
      if (std::find(out.retained.begin(), out.retained.end(), v) != out.retained.end()) {
        test_retained.push_back(v);
      }
    }
    if (!test_retained.empty()) {
      out.test_accuracy = accuracy(out.decrypted, g.labels, test_retained);
    }
  }
  return out;
}

CellResult run_cell_dispatch(const RunConfig& rc, const PlainGraph& g, const ModelWeights& w) {
  if (rc.backend == "ckks") return run_cell<he::CkksBackend>(rc, g, w);
  return run_cell<he::SimBackend>(rc, g, w);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string num(double v) { return json(v).dump(); }

const char* kCsvHeader =
    "id,variant,mode,backend,ring_degree,levels,scale_bits,graph,n,thresholds,"
    "pruning_ratio,poly,sharpen,mask_source,strategy,seed,add,add_plain,mult_ct,"
    "mult_plain,rotate,rescale,relinearize,max_depth,planned_depth,"
    "activation_mult_ct,agreement,max_abs_err,test_accuracy,retained,wall_time_ms";

std::string csv_row(const RunConfig& rc, const PlainGraph& g, const EngineConfig& cfg,
                    const CellResult& r) {
  std::ostringstream os;
  os << rc.id << ',' << variant_name(rc.variant) << ','
     << (rc.mode == EngineMode::kProtocol ? "protocol" : "compaction") << ',' << rc.backend
     << ',' << rc.params.ring_degree << ',' << rc.params.levels() << ','
     << rc.params.scale_bits << ',' << graph_stem(rc.graph_path) << ',' << g.n << ',';
  for (std::size_t i = 0; i < cfg.tau.m(); ++i) {
    if (i) os << '|';
    os << num(cfg.tau.tau[i]);
  }
  os << ',';
  if (rc.ratio) os << num(*rc.ratio);
  os << ',' << rc.poly_desc << ',' << rc.sharpen << ','
     << (rc.mask_source == MaskSource::kSoft ? "soft" : "oracle") << ','
     << (rc.strategy == he::PolyStrategy::kHorner ? "horner" : "ps") << ',' << rc.seed << ','
     << r.profile.add << ',' << r.profile.add_plain << ',' << r.profile.mult_ct << ','
     << r.profile.mult_plain << ',' << r.profile.rotate << ',' << r.profile.rescale << ','
     << r.profile.relinearize << ',' << r.profile.max_depth << ',' << r.plan.total << ','
     << activation_mult_ct(r.stage_profiles) << ',' << num(r.agreement) << ','
     << num(r.max_abs_err) << ',' << num(r.test_accuracy) << ',' << r.retained.size() << ','
     << num(r.wall_ms);
  return os.str();
}

ordered_json make_report(const RunConfig& rc, const PlainGraph& g, const EngineConfig& cfg,
                         const CellResult& r, const std::string& weights_desc,
                         const std::string& logits_path, const std::string& key_path) {
  ordered_json rep;
  rep["id"] = rc.id;
  rep["format_version"] = kReportFormatVersion;
  rep["library_version"] = kVersion;
  rep["variant"] = variant_name(rc.variant);
  rep["mode"] = rc.mode == EngineMode::kProtocol ? "protocol" : "compaction";
  rep["backend"] = rc.backend;
  rep["he_params"] = json(rc.params);
  rep["he_params"]["levels"] = rc.params.levels();
  rep["he_params"]["preset"] = rc.params_desc;
  rep["graph"] = {{"path", rc.graph_path}, {"n", g.n}, {"feature_dim", g.feature_dim()}};
  rep["weights"] = weights_desc;
  rep["thresholds"] = cfg.tau.tau;
  if (rc.ratio) {
    rep["pruning_ratio"] = *rc.ratio;
  } else {
    rep["pruning_ratio"] = -1.0;
  }
  rep["poly"] = rc.poly_desc;
  rep["sharpen"] = rc.sharpen;
  rep["delta"] = cfg.effective_delta(g.n);
  rep["mask_source"] = rc.mask_source == MaskSource::kSoft ? "soft" : "oracle";
  rep["ones"] = rc.ones == OnesMode::kEncrypted ? "encrypted" : "plain";
  rep["strategy"] = rc.strategy == he::PolyStrategy::kHorner ? "horner" : "ps";
  rep["seed"] = rc.seed;
  rep["planned_depth"] = r.plan.total;
  rep["profile"] = json(r.profile);
  rep["activation_mult_ct"] = activation_mult_ct(r.stage_profiles);
  rep["retained_nodes"] = r.retained.size();
  rep["agreement"] = r.agreement;
  rep["max_abs_logit_err"] = r.max_abs_err;
  rep["test_accuracy"] = r.test_accuracy;
  rep["wall_time_ms"] = r.wall_ms;
  rep["artifacts"] = {{"logits", logits_path},
                      {"decrypt_key", key_path},
                      {"blob_format_version", kBlobFormatVersion}};
  if (rc.trace) {
    ordered_json stages = ordered_json::array();
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      ordered_json s;
      s["stage"] = r.trace[i].stage;
      s["level"] = r.trace[i].level;
      if (i < r.plan.stages.size() && r.plan.stages[i].stage == r.trace[i].stage) {
        s["planned_level"] = r.plan.stages[i].level;
      }
      if (i < r.stage_profiles.size()) s["profile"] = json(r.stage_profiles[i].profile);
      stages.push_back(std::move(s));
    }
    rep["stage_trace"] = std::move(stages);
  }
  return rep;
}

void append_csv(const std::string& path, const std::vector<std::string>& rows) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("cannot write " + path);
  if (fresh) out << kCsvHeader << "\n";
  for (const auto& r : rows) out << r << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void write_blob(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelWeights obtain_weights(const RunConfig& rc, const PlainGraph& g, std::string* desc) {
  if (!rc.weights_path.empty()) {
    *desc = rc.weights_path;
    return load_weights(rc.weights_path);
  }
  if (!rc.train) {
    throw ConfigError("config.weights_path: required when no train section is present");
  }
  const json& t = *rc.train;
  TrainConfig tc;
  tc.epochs = t.value("epochs", tc.epochs);
  tc.lr = t.value("lr", tc.lr);
  tc.hidden_dim = t.value("hidden_dim", tc.hidden_dim);
  tc.dropout = t.value("dropout", tc.dropout);
  tc.weight_decay = t.value("weight_decay", tc.weight_decay);
  tc.patience = t.value("patience", tc.patience);
  tc.seed = t.value("seed", rc.seed);
  const std::string a = t.value("activation", std::string("relu5"));
  if (a == "square") {
    tc.activation = act::square();
  } else if (a == "identity") {
    tc.activation = act::identity();
  } else if (a == "relu3") {
    tc.activation = act::relu_fit_deg3();
  } else if (a == "relu5") {
    tc.activation = act::relu_fit_deg5();
  } else if (a == "relu7") {
    tc.activation = act::relu_fit_deg7();
  } else {
    throw ConfigError("config.train.activation: expected square|identity|relu3|relu5|relu7");
  }
  auto res = train_toy(g, tc);
  const std::string out_path =
      t.value("save_to", rc.output_dir + "/weights-" + rc.id + ".json");
  fs::create_directories(fs::path(out_path).parent_path().empty()
                             ? "."
                             : fs::path(out_path).parent_path().string());
  save_weights(res.weights, out_path);
  *desc = out_path;
  std::cout << "trained " << res.epochs_run << " epochs (best val acc " << res.best_val_accuracy
            << " at epoch " << res.best_epoch << "), weights -> " << out_path << "\n";
  return res.weights;
}

// Writes one finished cell's artifacts. Returns the CSV row.
std::string write_artifacts(const RunConfig& rc, const PlainGraph& g, const EngineConfig& cfg,
                            const CellResult& r, const std::string& weights_desc,
                            bool quiet = false) {
  fs::create_directories(rc.output_dir);
  std::string logits_path, key_path;
  if (!r.logits_blob.empty()) {
    logits_path = rc.output_dir + "/logits-" + rc.id + ".bin";
    write_blob(logits_path, r.logits_blob);
  }
  if (!r.key_blob.empty()) {
    key_path = rc.output_dir + "/key-" + rc.id + ".bin";
    write_blob(key_path, r.key_blob);
  }
  const ordered_json rep = make_report(rc, g, cfg, r, weights_desc, logits_path, key_path);
  const std::string report_path = rc.output_dir + "/report-" + rc.id + ".json";
  write_text(report_path, rep.dump(2) + "\n");

  const std::string row = csv_row(rc, g, cfg, r);
  append_csv(rc.output_dir + "/results.csv", {row});

  if (!quiet) {
    std::cout << "report " << report_path << "\n"
              << "  variant=" << variant_name(rc.variant)
              << " backend=" << rc.backend
              << " mult_ct=" << r.profile.mult_ct
              << " act_mult_ct=" << activation_mult_ct(r.stage_profiles)
              << " depth=" << r.profile.max_depth << "/" << r.plan.total
              << " agreement=" << r.agreement
              << " max_err=" << r.max_abs_err << "\n";
  }
  return row;
}

// Executes one cell end to end and writes its artifacts. Returns the CSV row.
std::string execute_and_write(const RunConfig& rc, const PlainGraph& g, const ModelWeights& w,
                              const std::string& weights_desc, bool quiet = false) {
  const EngineConfig cfg = engine_config(rc, g);
  const CellResult r = run_cell_dispatch(rc, g, w);
  return write_artifacts(rc, g, cfg, r, weights_desc, quiet);
}

// ---------------------------------------------------------------------------
// Verbs
// ---------------------------------------------------------------------------

int cmd_run(const RunConfig& rc) {
  const PlainGraph g = load_graph(rc.graph_path);
  std::string weights_desc;
  const ModelWeights w = obtain_weights(rc, g, &weights_desc);
  execute_and_write(rc, g, w, weights_desc);
  return 0;
}

int cmd_ablation(const RunConfig& base) {
  const PlainGraph g = load_graph(base.graph_path);
  std::string weights_desc;
  const ModelWeights w = obtain_weights(base, g, &weights_desc);

  std::vector<std::string> rows;
  for (Variant v : {Variant::kBFG, Variant::kPO, Variant::kAAO, Variant::kFF}) {
    RunConfig rc = base;
    rc.variant = v;
    rc.id = base.id + "-" + slug(variant_name(v));
    rows.push_back(execute_and_write(rc, g, w, weights_desc));
  }
  const std::string table = base.output_dir + "/ablation-" + base.id + ".csv";
  write_text(table, std::string(kCsvHeader) + "\n" + rows[0] + "\n" + rows[1] + "\n" +
                        rows[2] + "\n" + rows[3] + "\n");
  std::cout << "ablation table " << table << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& base, int jobs) {
  const PlainGraph g = load_graph(base.graph_path);
  std::string weights_desc;
  const ModelWeights w = obtain_weights(base, g, &weights_desc);

  struct Cell {
    RunConfig rc;
  };
  std::vector<Cell> cells;
  const std::vector<double> ratios =
      base.sweep_ratios.empty() ? std::vector<double>{} : base.sweep_ratios;
  const std::vector<std::string> polys =
      base.sweep_polys.empty() ? std::vector<std::string>{} : base.sweep_polys;
  if (ratios.empty() && polys.empty()) {
    throw ConfigError("config.sweep: empty grid (need ratios and/or psets)");
  }
  const auto one_ratio = ratios.empty() ? std::vector<double>{-1.0} : ratios;
  const auto one_poly = polys.empty() ? std::vector<std::string>{base.poly_desc} : polys;
  for (double r : one_ratio) {
    for (const std::string& p : one_poly) {
      RunConfig rc = base;
      rc.poly_desc = p;
      rc.polys = resolve_polys(p);
      std::string suffix = "-" + slug(p);
      if (r >= 0.0) {
        rc.thresholds.reset();
        rc.ratio = r;
        std::ostringstream rs;
        rs << "-r" << static_cast<int>(r * 100 + 0.5);
        suffix += rs.str();
      }
      rc.id = base.id + suffix;
      cells.push_back({std::move(rc)});
    }
  }

  // Cells run in parallel up to --jobs; each owns its backend (and with it
  // key material and profiler). Artifacts are written afterwards in cell order.
  std::vector<EngineConfig> cfgs(cells.size());
  std::vector<CellResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::size_t next = 0;
  std::mutex next_mutex;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lk(next_mutex);
        if (next >= cells.size()) return;
        i = next++;
      }
      try {
        cfgs[i] = engine_config(cells[i].rc, g);
        results[i] = run_cell_dispatch(cells[i].rc, g, w);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_jobs = std::max(1, jobs);
  if (n_jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::string> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i] = write_artifacts(cells[i].rc, g, cfgs[i], results[i], weights_desc,
                              /*quiet=*/true);
  }

  const std::string table = base.output_dir + "/sweep-" + base.id + ".csv";
  std::string text = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) text += r + "\n";
  write_text(table, text);
  std::cout << "sweep table " << table << " (" << cells.size() << " cells)\n";
  return 0;
}

int cmd_train(const RunConfig& rc) {
  if (!rc.train) throw ConfigError("config.train: required for the train verb");
  const PlainGraph g = load_graph(rc.graph_path);
  std::string desc;
  const ModelWeights w = obtain_weights(rc, g, &desc);
  const Matrix logits = forward_plain(g, w, act::relu_fit_deg5());
  if (!g.labels.empty()) {
    auto report = [&](const char* name, const std::vector<std::size_t>& ids) {
      if (!ids.empty()) std::cout << "  " << name << " accuracy " << accuracy(logits, g.labels, ids) << "\n";
    };
    report("train", g.splits.train);
    report("val", g.splits.val);
    report("test", g.splits.test);
  }
  return 0;
}

template <class Backend>
int keygen_with(const RunConfig& rc, const std::vector<int>& steps) {
  const auto t0 = std::chrono::steady_clock::now();
  Backend backend(rc.params, rc.seed);
  auto keys = backend.keygen(steps);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(rc.output_dir);
  he::BinaryWriter bw;
  write_decrypt_key(backend, keys, bw);
  const std::string path = rc.output_dir + "/key-" + rc.id + ".bin";
  write_blob(path, bw.bytes());
  std::cout << "keygen " << Backend::kName << " ring_degree=" << rc.params.ring_degree
            << " levels=" << rc.params.levels() << " rotation_steps=" << steps.size()
            << " in " << ms << " ms\n"
            << "decrypt key -> " << path << " (" << bw.bytes().size() << " bytes)\n";
  return 0;
}

int cmd_keygen(const RunConfig& rc) {
  std::vector<int> steps;
  if (!rc.graph_path.empty() && fs::exists(rc.graph_path)) {
    const PlainGraph g = load_graph(rc.graph_path);
    steps = he::rotation_steps_for_block(g.n, rc.params.slot_count());
  } else {
    steps = he::default_rotation_steps(rc.params.slot_count());
  }
  if (rc.backend == "ckks") return keygen_with<he::CkksBackend>(rc, steps);
  return keygen_with<he::SimBackend>(rc, steps);
}

template <class Backend>
int inspect_with(const he::HEParams& params, std::uint64_t seed, const std::string& key_path,
                 const std::string& logits_path) {
  Backend backend(params, seed);
  auto kr = he::read_file(key_path);
  auto keys = backend.deserialize_keyset(kr);

  auto r = he::read_file(logits_path);
  if (he::read_header(r) != he::BlobKind::kCiphertextList) {
    throw ParseError(logits_path + ": not a ciphertext list");
  }
  const bool compaction = r.u8() == 1;
  const std::size_t n = r.u64();
  const std::size_t out_dim = r.u64();
  std::vector<std::size_t> nodes(r.u64());
  for (auto& v : nodes) v = r.u64();
  std::vector<typename Backend::Ciphertext> cts(r.u64());
  for (auto& ct : cts) ct = backend.deserialize_ciphertext(r);

  Matrix logits(n, std::vector<double>(out_dim, 0.0));
  std::vector<bool> present(n, !compaction);
  if (compaction) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      present[nodes[i]] = true;
      for (std::size_t k = 0; k < out_dim; ++k) {
        logits[nodes[i]][k] = backend.decrypt(cts[i * out_dim + k], keys)[0];
      }
    }
  } else {
    for (std::size_t k = 0; k < cts.size(); ++k) {
      const auto slots = backend.decrypt(cts[k], keys);
      for (std::size_t v = 0; v < n; ++v) logits[v][k] = slots[v];
    }
  }

  std::cout << "node,logits...,argmax\n";
  for (std::size_t v = 0; v < n; ++v) {
    std::cout << v;
    if (!present[v]) {
      std::cout << ",pruned\n";
      continue;
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < out_dim; ++k) {
      std::cout << ',' << logits[v][k];
      if (logits[v][k] > logits[v][best]) best = k;
    }
    std::cout << ',' << best << "\n";
  }
  return 0;
}

int cmd_inspect(const std::string& report_path, const std::string& key_override) {
  const json rep = parse_json_file(report_path);
  he::HEParams params;
  try {
    params = rep.at("he_params").get<he::HEParams>();
  } catch (const json::exception& e) {
    throw ConfigError(report_path + ": he_params: " + e.what());
  }
  const std::string backend = rep.value("backend", std::string("sim"));
  const std::uint64_t seed = rep.value("seed", std::uint64_t{1});
  const std::string logits_path = rep.at("artifacts").value("logits", std::string());
  std::string key_path = key_override.empty()
                             ? rep.at("artifacts").value("decrypt_key", std::string())
                             : key_override;
  if (logits_path.empty()) throw ConfigError(report_path + ": no saved logits to inspect");
  if (key_path.empty()) throw ConfigError(report_path + ": no decryption key recorded; pass --key");
  if (backend == "ckks") return inspect_with<he::CkksBackend>(params, seed, key_path, logits_path);
  return inspect_with<he::SimBackend>(params, seed, key_path, logits_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Encrypted graph inference experiment harness"};
  app.require_subcommand(1);

  std::string config_path, report_path, key_override;
  std::string variant_override, backend_override, mode_override, output_override;
  std::int64_t seed_override = -1;
  bool trace = false;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("--variant", variant_override, "override variant (FF|PO|AAO|BFG)");
    sub->add_option("--backend", backend_override, "override backend (sim|ckks)");
    sub->add_option("--mode", mode_override, "override mode (protocol|compaction)");
    sub->add_option("--seed", seed_override, "override seed");
    sub->add_option("--output-dir", output_override, "override output directory");
    sub->add_flag("--trace", trace, "record a per-stage depth trace in the report");
  };

  auto* run = app.add_subcommand("run", "execute one experiment cell");
  add_common(run);
  auto* ablation = app.add_subcommand("ablation", "run all four variants on identical inputs");
  add_common(ablation);
  auto* sweep = app.add_subcommand("sweep", "grid over pruning ratios and/or activation presets");
  add_common(sweep);
  sweep->add_option("-j,--jobs", jobs, "parallel sweep cells")->check(CLI::PositiveNumber);
  auto* train = app.add_subcommand("train", "train weights on a labeled graph");
  add_common(train);
  auto* keygen = app.add_subcommand("keygen", "generate keys and save the decryption key");
  add_common(keygen);
  auto* inspect = app.add_subcommand("inspect", "decrypt and print a report's logits");
  inspect->add_option("-r,--report", report_path, "report JSON file")->required();
  inspect->add_option("--key", key_override, "decryption key blob (defaults to report artifact)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) return cmd_inspect(report_path, key_override);

    RunConfig rc = parse_config(config_path);
    if (!variant_override.empty()) rc.variant = variant_by_name(variant_override);
    if (!backend_override.empty()) {
      if (backend_override != "sim" && backend_override != "ckks") {
        throw ConfigError("--backend: expected sim|ckks");
      }
      rc.backend = backend_override;
    }
    if (!mode_override.empty()) {
      if (mode_override == "protocol") {
        rc.mode = EngineMode::kProtocol;
      } else if (mode_override == "compaction") {
        rc.mode = EngineMode::kCompaction;
      } else {
        throw ConfigError("--mode: expected protocol|compaction");
      }
    }
    if (seed_override >= 0) rc.seed = static_cast<std::uint64_t>(seed_override);
    if (!output_override.empty()) rc.output_dir = output_override;
    if (trace) rc.trace = true;
    if (!variant_override.empty() || !backend_override.empty() || !mode_override.empty() ||
        seed_override >= 0) {
      // Recompute the derived id so overridden cells do not collide.
      rc.id = graph_stem(rc.graph_path) + "-" + slug(variant_name(rc.variant)) + "-" +
              (rc.mode == EngineMode::kProtocol ? "prot" : "comp") + "-" + rc.backend + "-s" +
              std::to_string(rc.seed);
    }

    if (run->parsed()) return cmd_run(rc);
    if (ablation->parsed()) return cmd_ablation(rc);
    if (sweep->parsed()) return cmd_sweep(rc, jobs);
    if (train->parsed()) return cmd_train(rc);
    if (keygen->parsed()) return cmd_keygen(rc);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
