#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcms/clustering.hpp"
#include "dcms/error.hpp"
#include "dcms/estimators.hpp"
#include "dcms/kernels.hpp"
#include "dcms/monitor.hpp"
#include "dcms/report.hpp"
#include "dcms/synth.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::size_t workers = 0;
  std::string kernel = "rbf";
  std::size_t max_pairs = kDefaultMedianPairs;
};

struct CkaArgs {
  std::string train;
  std::string out;
  std::string csv;
  std::size_t batch = 100;
  std::string gamma = "median";
};

struct ClusterArgs {
  std::string matrix;
  std::size_t k = 0;
  std::string linkage = "average";
  std::string out;
  std::string heights;
};

struct MonitorArgs {
  std::string test;
  std::string snapshots;
  std::string partition;
  std::string out;
  std::size_t batch = 150;
  bool mmd = false;
  std::string gamma_source = "test";
  double gamma = 0.0;
  std::string train;
  std::size_t n_test = 0;
  std::size_t k = 0;
  std::string linkage = "average";
  std::size_t cka_batch = 100;
  std::string formats = "json,csv,svg";
};

struct SynthArgs {
  std::string spec;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string partition;
};

struct VerifyArgs {
  std::string x;
  std::string y;
  std::string partition;
  std::size_t batch = 150;
  std::string gamma = "median";
};

/// "median" or a positive number.
std::optional<double> parse_gamma(const std::string& text) {
  if (text == "median") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("--gamma expects a number or \"median\", got \"" + text + "\"");
  }
  return v;
}

/// 0 selects a single block over all samples.
EstimatorConfig estimator_config(std::size_t workers, std::size_t cms_batch, std::size_t cka_batch) {
  EstimatorConfig cfg;
  cfg.workers = workers;
  cfg.blocked = cms_batch != 0 && cka_batch != 0;
  if (cms_batch != 0) cfg.cms_batch = cms_batch;
  if (cka_batch != 0) cfg.cka_batch = cka_batch;
  return cfg;
}

SampleMatrix load_f32(const std::string& path) { return load_sample_matrix(path, SampleFormat::raw_f32); }

int run_cka(const Common& common, const CkaArgs& a, std::ostream& out) {
  const SampleMatrix train = load_f32(a.train);
  KernelSpec spec{parse_kernel_family(common.kernel), 1.0};
  if (const auto g = parse_gamma(a.gamma)) {
    spec.gamma = *g;
  } else {
    spec.gamma = median_heuristic_gamma(train, IndexSet::all(train.pixels()), common.max_pairs);
  }
  spec.validate();
  const CkaMatrix m = cka_matrix(spec, train, estimator_config(common.workers, 150, a.batch));
  save_cka_matrix(m, a.out);
  if (!a.csv.empty()) export_cka_csv(m, a.csv);
  const auto degenerate = m.degenerate();
  nlohmann::ordered_json summary;
  summary["d"] = m.size();
  summary["gamma"] = spec.gamma;
  summary["degenerate"] = degenerate;
  out << summary.dump() << '\n';
  return kExitOk;
}

int run_cluster(const ClusterArgs& a, std::ostream& out) {
  const CkaMatrix m = load_cka_matrix(a.matrix);
  const Dendrogram dg = agglomerate(m, a.k, parse_linkage(a.linkage));
  save_partition(dg.partition, a.out);
  if (!a.heights.empty()) {
    nlohmann::json merges = nlohmann::json::array();
    for (const Merge& mg : dg.merges) {
      merges.push_back({{"left", mg.left}, {"right", mg.right}, {"height", mg.height}, {"size", mg.size}});
    }
    std::ofstream h(a.heights);
    if (!h) throw InputError("cannot write " + a.heights);
    h << merges.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["clusters"] = dg.partition.size();
  summary["degenerate"] = m.degenerate();
  out << summary.dump() << '\n';
  return kExitOk;
}

ReportFormats parse_formats(const std::string& text) {
  ReportFormats f{false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    if (item == "json") f.json = true;
    else if (item == "csv") f.csv = true;
    else if (item == "svg") f.svg = true;
    else throw InputError("unknown report format \"" + item + "\"");
    start = end + 1;
  }
  return f;
}

int run_monitor(const Common& common, const MonitorArgs& a, std::ostream& out) {
  const SampleMatrix test = load_f32(a.test);
  const SnapshotSeries series = load_snapshot_series(a.snapshots);
  std::optional<SampleMatrix> train;
  if (!a.train.empty()) train = load_f32(a.train);

  MonitorConfig cfg;
  cfg.family = parse_kernel_family(common.kernel);
  cfg.gamma_source = parse_gamma_source(a.gamma_source);
  cfg.gamma = a.gamma;
  cfg.max_pairs = common.max_pairs;
  cfg.estimator = estimator_config(common.workers, a.batch, a.cka_batch);
  cfg.emit_mmd = a.mmd;
  if (a.n_test != 0) cfg.n_test = a.n_test;
  if (!a.partition.empty()) {
    cfg.partition = load_partition(a.partition);
  } else if (a.k != 0) {
    cfg.partition = ClusterRequest{a.k, parse_linkage(a.linkage)};
  } else {
    throw InputError("monitor needs --partition or --k with --train");
  }

  const MonitorResult result = monitor(test, series, cfg, train ? &*train : nullptr);
  report_emit(result, a.out, parse_formats(a.formats));
  nlohmann::ordered_json summary;
  summary["snapshots"] = result.reports.size();
  summary["gamma"] = result.kernel.gamma;
  summary["out"] = a.out;
  out << summary.dump() << '\n';
  return kExitOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  const SynthSpec spec = load_synth_spec(a.spec);
  const SampleMatrix m = synth_independent(spec, a.n, a.seed);
  save_sample_matrix(m, a.out, SampleFormat::raw_f32);
  if (!a.partition.empty()) save_partition(spec.partition(), a.partition);
  out << nlohmann::ordered_json{{"n", m.size()}, {"d", m.pixels()}, {"out", a.out}}.dump() << '\n';
  return kExitOk;
}

int run_verify(const Common& common, const VerifyArgs& a, std::ostream& out) {
  const SampleMatrix x = load_f32(a.x);
  const SampleMatrix y = load_f32(a.y);
  const Partition partition = load_partition(a.partition);
  KernelSpec spec{parse_kernel_family(common.kernel), 1.0};
  if (const auto g = parse_gamma(a.gamma)) {
    spec.gamma = *g;
  } else {
    spec.gamma = median_heuristic_gamma(x, IndexSet::all(x.pixels()), common.max_pairs);
  }
  spec.validate();
  const Factorization f = verify_factorization(x, y, partition, spec, estimator_config(common.workers, a.batch, 100));
  nlohmann::ordered_json j;
  j["gamma"] = spec.gamma;
  j["image_cms"] = f.image_cms;
  j["cluster_cms"] = f.cluster_cms;
  j["product_cms"] = f.product_cms;
  j["gap"] = f.gap;
  out << j.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disentangled cosine mean similarity for image generators", "dcms"};
  app.require_subcommand(1);

  Common common;
  app.add_option("--workers", common.workers, "Worker threads (0 = all cores)");
  app.add_option("--kernel", common.kernel, "Pixel kernel: rbf or laplacian");
  app.add_option("--max-pairs", common.max_pairs, "Pair budget of the median heuristic");

  CkaArgs cka;
  auto* cka_cmd = app.add_subcommand("cka", "Pairwise-pixel CKA matrix of training data");
  cka_cmd->add_option("--train", cka.train, "Training samples (.f32)")->required();
  cka_cmd->add_option("--out", cka.out, "Output matrix (.f32 + sidecar)")->required();
  cka_cmd->add_option("--batch", cka.batch, "CKA mini-batch size (0 = one block)");
  cka_cmd->add_option("--gamma", cka.gamma, "Bandwidth value or \"median\"");
  cka_cmd->add_option("--csv", cka.csv, "Also export the matrix as CSV");

  ClusterArgs cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "Hierarchical clustering of a CKA matrix");
  cluster_cmd->add_option("--matrix", cl.matrix, "CKA matrix (.f32 + sidecar)")->required();
  cluster_cmd->add_option("--k", cl.k, "Number of clusters")->required();
  cluster_cmd->add_option("--linkage", cl.linkage, "average, complete or single");
  cluster_cmd->add_option("--out", cl.out, "Partition JSON")->required();
  cluster_cmd->add_option("--heights", cl.heights, "Write merge heights as JSON");

  MonitorArgs mon;
  auto* monitor_cmd = app.add_subcommand("monitor", "Image-wise vs cluster-wise CMS over snapshots");
  monitor_cmd->add_option("--test", mon.test, "Test samples (.f32)")->required();
  monitor_cmd->add_option("--snapshots", mon.snapshots, "Directory of snap_<ordinal>.f32")->required();
  monitor_cmd->add_option("--partition", mon.partition, "Partition JSON");
  monitor_cmd->add_option("--out", mon.out, "Report directory")->required();
  monitor_cmd->add_option("--batch", mon.batch, "CMS mini-batch size (0 = one block)");
  monitor_cmd->add_flag("--mmd", mon.mmd, "Report MMD^2 as well");
  monitor_cmd->add_option("--gamma-source", mon.gamma_source, "train, test or value");
  monitor_cmd->add_option("--gamma", mon.gamma, "Bandwidth for --gamma-source value");
  monitor_cmd->add_option("--train", mon.train, "Training samples (.f32)");
  monitor_cmd->add_option("--n-test", mon.n_test, "Use the first N test samples");
  monitor_cmd->add_option("--k", mon.k, "Cluster count when no --partition is given");
  monitor_cmd->add_option("--linkage", mon.linkage, "Linkage when clustering");
  monitor_cmd->add_option("--cka-batch", mon.cka_batch, "CKA mini-batch size when clustering");
  monitor_cmd->add_option("--formats", mon.formats, "Comma list of json, csv, svg");

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic data with independent pixel blocks");
  synth_cmd->add_option("--spec", syn.spec, "Block specification JSON")->required();
  synth_cmd->add_option("--n", syn.n, "Number of samples")->required();
  synth_cmd->add_option("--seed", syn.seed, "Random seed")->required();
  synth_cmd->add_option("--out", syn.out, "Output samples (.f32 + sidecar)")->required();
  synth_cmd->add_option("--partition", syn.partition, "Also write the true partition JSON");

  VerifyArgs ver;
  auto* verify_cmd = app.add_subcommand("verify", "Compare image-wise CMS with the cluster product");
  verify_cmd->add_option("--x", ver.x, "First dataset (.f32)")->required();
  verify_cmd->add_option("--y", ver.y, "Second dataset (.f32)")->required();
  verify_cmd->add_option("--partition", ver.partition, "Partition JSON")->required();
  verify_cmd->add_option("--batch", ver.batch, "CMS mini-batch size (0 = one block)");
  verify_cmd->add_option("--gamma", ver.gamma, "Bandwidth value or \"median\" (on --x)");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*cka_cmd) return run_cka(common, cka, out);
    if (*cluster_cmd) return run_cluster(cl, out);
    if (*monitor_cmd) return run_monitor(common, mon, out);
    if (*synth_cmd) return run_synth(syn, out);
    if (*verify_cmd) return run_verify(common, ver, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DegenerateError& e) {
    err << "degenerate data: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace dcms::cli
