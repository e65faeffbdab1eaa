#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "maxfun/classify.hpp"
#include "maxfun/csc.hpp"
#include "maxfun/dataio.hpp"
#include "maxfun/parallel.hpp"
#include "maxfun/pooling.hpp"
#include "maxfun/random.hpp"
#include "maxfun/selfcheck.hpp"

namespace maxfun::cli {

namespace fs = std::filesystem;

namespace {

fs::path required_path(const json& cfg, std::string_view key) {
  fs::path p = get_path(cfg, key, {});
  if (p.empty()) throw InvalidArgument("config key '" + std::string(key) + "' is required");
  return p;
}

void require_parent(const fs::path& out) {
  const fs::path parent = out.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw InvalidArgument("output directory " + parent.string() + " does not exist");
  }
}

double get_real(const json& cfg, std::string_view key) {
  const double v = get<double>(cfg, key);
  if (!std::isfinite(v)) throw InvalidArgument("config key '" + std::string(key) + "' must be finite");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// pool

json pool_defaults() {
  return {
      {"input", nullptr},  {"output", nullptr}, {"provenance", nullptr}, {"method", "maxfun"},
      {"window", 7},       {"stride", 7},       {"alpha", 0.5},          {"r_min", 1},
      {"b", 3},            {"preprocess", false}, {"side", 128},
  };
}

int cmd_pool(const json& cfg) {
  const fs::path input = required_path(cfg, "input");
  const fs::path output = required_path(cfg, "output");
  const fs::path provenance = get_path(cfg, "provenance", {});
  const pool::Method method = pool::parse_method(get<std::string>(cfg, "method"));
  const std::size_t window = get_count(cfg, "window");
  const std::size_t stride = get_count(cfg, "stride");
  const pool::PoolParams params{get_real(cfg, "alpha"), get_count(cfg, "r_min"), get_count(cfg, "b")};
  const bool preprocess = get<bool>(cfg, "preprocess");
  const std::size_t side = get_count(cfg, "side");

  const bool maxfun = method == pool::Method::maxfun || method == pool::Method::maxfun_noncentered;
  if (maxfun) pool::MaxfunConfig{params.r_min, params.b, method == pool::Method::maxfun}.validate(window);
  if (method == pool::Method::mixed && !(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    throw InvalidArgument("alpha must lie in [0, 1]");
  }
  if (!provenance.empty() && !maxfun) throw InvalidArgument("provenance is only produced by maxfun methods");
  if (preprocess && side == 0) throw InvalidArgument("side must be positive");
  require_parent(output);
  if (!provenance.empty()) require_parent(provenance);

  FeatureTensor in;
  if (input.extension() == ".mfpf") {
    in = io::read_features(input);
  } else {
    Image img = io::load_image(input);
    if (preprocess) img = io::resize(io::pad_to_square(img), side, side);
    in = FeatureTensor(1, img.rows(), img.cols());
    in.set_channel(0, img);
  }
  pool::require_nonnegative(in.values, input.string());
  const pool::PoolGrid grid = pool::make_grid(in.rows, in.cols, window, stride);

  FeatureTensor out(in.channels, grid.out_rows(), grid.out_cols());
  std::ostringstream prov;
  prov << "channel,row,col,radius,center_row,center_col\n";
  for (std::size_t c = 0; c < in.channels; ++c) {
    const auto pooled = pool::apply(in.channel(c), grid, method, params);
    out.set_channel(c, pooled.values);
    for (std::size_t cell = 0; cell < pooled.provenance.size(); ++cell) {
      const auto& w = pooled.provenance[cell];
      prov << c << ',' << cell / grid.out_cols() << ',' << cell % grid.out_cols() << ',' << w.radius << ','
           << w.center.row << ',' << w.center.col << '\n';
    }
  }
  io::write_features(output, out);
  if (!provenance.empty()) io::write_file_atomic(provenance, prov.str());

  std::cout << "pooled " << in.channels << "x" << in.rows << "x" << in.cols << " -> " << out.channels << "x"
            << out.rows << "x" << out.cols << " with " << pool::to_string(method) << ", wrote " << output.string()
            << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// csc-verify

json csc_verify_defaults() {
  return {
      {"trials", 100},     {"seed", 0},          {"eps0", 0.1},     {"solver", "oracle"},
      {"coherence", "per_layer"}, {"signal_length", 32}, {"slack", 1e-9}, {"amplitude", {1.0, 2.0}},
      {"report", nullptr}, {"layers", nullptr},
  };
}

namespace {

csc::DcppModel parse_model(const json& cfg) {
  const std::size_t n = get_count(cfg, "signal_length");
  const json& layers = cfg.at("layers");
  if (layers.is_null()) return csc::default_stability_model(n);
  if (!layers.is_array() || layers.empty()) throw InvalidArgument("config key 'layers' must be a non-empty array");

  const json layer_schema = {{"filters", nullptr}, {"window", 0}, {"stride", 0}, {"r_min", 0},
                             {"b", 0},             {"centered", true}, {"lambda", 0}};
  std::vector<csc::LayerSpec> specs;
  std::size_t length = n;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const json& l = layers[i];
    const std::string tag = "layers[" + std::to_string(i) + "]";
    if (!l.is_object()) throw InvalidArgument(tag + " must be an object");
    check_keys(l, layer_schema, tag);
    const auto filters = get<std::vector<std::vector<double>>>(l, "filters");
    if (filters.empty() || filters.front().empty()) throw InvalidArgument(tag + ".filters must be non-empty");
    Mat local(static_cast<Eigen::Index>(filters.front().size()), static_cast<Eigen::Index>(filters.size()));
    for (std::size_t f = 0; f < filters.size(); ++f) {
      if (filters[f].size() != filters.front().size()) throw InvalidArgument(tag + ".filters differ in length");
      for (std::size_t t = 0; t < filters[f].size(); ++t) {
        local(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = filters[f][t];
      }
    }
    csc::LayerSpec spec{csc::ConvDictionary(local, length), get_count(l, "window"), get_count(l, "stride"),
                        {get_count(l, "r_min"), get_count(l, "b"), l.value("centered", true)},
                        get_count(l, "lambda"), 0.0};
    length = spec.output_length();
    specs.push_back(std::move(spec));
  }
  return csc::DcppModel(std::move(specs));
}

}  // namespace

int cmd_csc_verify(const json& cfg) {
  const std::size_t trials = get_count(cfg, "trials");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  csc::StabilityOptions base;
  base.eps0 = get_real(cfg, "eps0");
  base.slack = get_real(cfg, "slack");
  const auto amp = get<std::vector<double>>(cfg, "amplitude");
  if (amp.size() != 2 || !(amp[0] > 0.0) || !(amp[1] >= amp[0])) {
    throw InvalidArgument("amplitude must be [lo, hi] with 0 < lo <= hi");
  }
  base.amp = {amp[0], amp[1]};
  const auto solver = get<std::string>(cfg, "solver");
  if (solver == "oracle") {
    base.solver = csc::SolverKind::oracle;
  } else if (solver == "greedy") {
    base.solver = csc::SolverKind::greedy;
  } else {
    throw InvalidArgument("solver must be 'oracle' or 'greedy'");
  }
  const auto reading = get<std::string>(cfg, "coherence");
  if (reading == "per_layer") {
    base.reading = csc::CoherenceReading::per_layer;
  } else if (reading == "first_layer") {
    base.reading = csc::CoherenceReading::first_layer;
  } else {
    throw InvalidArgument("coherence must be 'per_layer' or 'first_layer'");
  }
  if (trials == 0) throw InvalidArgument("trials must be positive");
  if (!(base.eps0 >= 0.0)) throw InvalidArgument("eps0 must be non-negative");
  if (!(base.slack >= 0.0)) throw InvalidArgument("slack must be non-negative");
  const fs::path report_path = get_path(cfg, "report", {});
  if (!report_path.empty()) require_parent(report_path);

  const csc::DcppModel model = parse_model(cfg);
  csc::check_stability_preconditions(model);
  const auto eps_sq = csc::layer_eps_squared(model, base.eps0, base.reading);

  std::vector<csc::StabilityReport> reports(trials);
  parallel_for(trials, [&](std::size_t t) {
    csc::StabilityOptions opts = base;
    opts.seed = derive_seed(seed, t);
    reports[t] = csc::verify_stability(model, opts);
  });

  std::ostringstream csv;
  csc::write_report_header(csv);
  std::size_t pairs = 0;
  std::size_t passed = 0;
  std::size_t trials_passed = 0;
  std::size_t fallbacks = 0;
  for (const auto& r : reports) {
    csc::write_report_rows(csv, r);
    trials_passed += r.pass() ? 1 : 0;
    for (const auto& l : r.layers) {
      ++pairs;
      passed += l.pass() ? 1 : 0;
      fallbacks += l.solver_fallback ? 1 : 0;
    }
  }
  if (!report_path.empty()) io::write_file_atomic(report_path, csv.str());

  std::cout << "layers: " << model.depth() << ", input length " << model.input_length() << '\n';
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const auto& l = model.layers()[i];
    std::cout << "  layer " << i + 1 << ": mu=" << std::setprecision(6) << l.dict.coherence()
              << " lambda=" << l.lambda << " eps^2=" << eps_sq[i] << '\n';
  }
  std::cout << "trials passed: " << trials_passed << "/" << trials << ", (trial, layer) pairs passed: " << passed
            << "/" << pairs << ", pass rate " << std::fixed << std::setprecision(3)
            << static_cast<double>(trials_passed) / static_cast<double>(trials) << '\n';
  if (base.solver == csc::SolverKind::greedy) {
    std::cout << "greedy pursuit fell back to the oracle support in " << fallbacks << " layer solves\n";
  }
  return trials_passed == trials ? kOk : kVerification;
}

// ---------------------------------------------------------------------------
// classify

json classify_defaults() {
  const classify::ComparisonConfig d;
  json strategies = json::array();
  for (auto s : d.strategies) strategies.push_back(std::string(classify::to_string(s)));
  json regimes = json::array();
  for (const auto& r : d.regimes) regimes.push_back({r.window, r.stride});
  return {
      {"manifest", nullptr},
      {"output_csv", nullptr},
      {"output_table", nullptr},
      {"seed", d.seed},
      {"image_side", d.image_side},
      {"test_fraction", d.test_fraction},
      {"folds", d.folds},
      {"regimes", regimes},
      {"strategies", strategies},
      {"alpha_grid", d.alpha_grid},
      {"rmin_grid", json::array()},
      {"svm", {{"reg_c", d.svm.reg_c}, {"epochs", d.svm.epochs}}},
      {"min_class_count", 0},
      {"max_class_count", nullptr},
  };
}

int cmd_classify(const json& cfg) {
  const fs::path manifest_path = required_path(cfg, "manifest");
  const fs::path csv_path = get_path(cfg, "output_csv", {});
  const fs::path table_path = get_path(cfg, "output_table", {});
  if (!csv_path.empty()) require_parent(csv_path);
  if (!table_path.empty()) require_parent(table_path);

  classify::ComparisonConfig c;
  c.seed = get<std::uint64_t>(cfg, "seed");
  c.image_side = get_count(cfg, "image_side");
  c.test_fraction = get_real(cfg, "test_fraction");
  c.folds = get_count(cfg, "folds");
  c.regimes.clear();
  for (const auto& r : get<std::vector<std::vector<std::size_t>>>(cfg, "regimes")) {
    if (r.size() != 2) throw InvalidArgument("each regime must be [window, stride]");
    c.regimes.push_back({r[0], r[1]});
  }
  c.strategies.clear();
  for (const auto& s : get<std::vector<std::string>>(cfg, "strategies")) c.strategies.push_back(classify::parse_strategy(s));
  c.alpha_grid = get<std::vector<double>>(cfg, "alpha_grid");
  c.rmin_grid = get<std::vector<std::size_t>>(cfg, "rmin_grid");
  const json& svm = cfg.at("svm");
  c.svm.reg_c = get_real(svm, "reg_c");
  c.svm.epochs = get_count(svm, "epochs");
  c.svm.seed = derive_seed(c.seed, 3);
  c.validate();

  const std::size_t min_count = get_count(cfg, "min_class_count");
  const std::size_t max_count = cfg.at("max_class_count").is_null() ? io::kUnbounded : get_count(cfg, "max_class_count");
  if (!fs::is_regular_file(manifest_path)) throw InvalidArgument("manifest " + manifest_path.string() + " not found");
  const io::Manifest manifest = io::filter_classes(io::read_manifest(manifest_path), min_count, max_count);
  if (manifest.labels().size() < 2) throw InvalidArgument("the dataset needs at least two classes");
  for (const auto& e : manifest.entries()) {
    if (!fs::is_regular_file(e.path)) throw InvalidArgument("dataset file " + e.path.string() + " not found");
  }
  io::split_indices(manifest.size(), c.test_fraction, 0);  // rejects a degenerate split up front

  const auto table = classify::run_pooling_comparison(manifest, c);
  if (!csv_path.empty()) io::write_file_atomic(csv_path, table.to_csv());
  if (!table_path.empty()) io::write_file_atomic(table_path, table.to_text());

  const auto hist = manifest.histogram();
  std::cout << manifest.size() << " images in " << hist.size() << " classes\n\n" << table.to_text();
  return kOk;
}

// ---------------------------------------------------------------------------
// selftest

json selftest_defaults() { return {{"seed", 42}}; }

int cmd_selftest(const json& cfg) {
  const auto seed = get<std::uint64_t>(cfg, "seed");
  bool ok = true;
  for (const auto& r : selfcheck::run_all(seed)) {
    std::cout << selfcheck::format(r) << std::endl;
    ok = ok && r.pass;
  }
  std::cout << (ok ? "all suites passed" : "some suites FAILED") << '\n';
  return ok ? kOk : kVerification;
}

}  // namespace maxfun::cli
