// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qspace/cli.hpp"
#include "qspace/design.hpp"
#include "qspace/error.hpp"
#include "qspace/experiment.hpp"
#include "qspace/io.hpp"
#include "qspace/parallel.hpp"
#include "qspace/phantom.hpp"
#include "qspace/pipeline.hpp"
#include "qspace/score.hpp"
#include "qspace/tract.hpp"

#ifndef QSPACE_VERSION
#define QSPACE_VERSION "unknown"
#endif

namespace qspace::cli {

std::string version() { return QSPACE_VERSION; }

namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
  std::istringstream is(read_file(path));
  std::vector<std::pair<std::string, std::string>> out;
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

// Splices the entries of --config files in front of the other flags of the
// subcommand, so flags given on the command line take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::vector<std::string> spliced;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    for (auto& [key, value] : read_config(path)) {
      if (key == "config") throw UsageError(path + ": nested config files are not supported");
      spliced.push_back("--" + key);
      spliced.push_back(value);
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), spliced.begin(), spliced.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

Dims parse_dims(const std::string& text) {
  std::vector<int> v;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(trim(part), &used));
      if (used != trim(part).size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("bad dims '" + text + "'");
    }
  }
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw UsageError("dims must be N or X,Y,Z");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');)
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(format_double(x)));
  return a;
}

// Effective parameters, outputs and results of one run.
class Manifest {
 public:
  Manifest(std::string command, const CLI::App& app) : command_(std::move(command)) {
    for (const CLI::Option* o : app.get_options()) {
      if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
      std::string value;
      if (o->count()) {
        const auto& r = o->results();
        for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
      } else {
        value = o->get_default_str();
      }
      params_[o->get_lnames()[0]] = value;
    }
    params_["threads"] = std::to_string(thread_count());
  }

  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  json& results() { return results_; }

  void write(const fs::path& path) const {
    json j;
    j["tool"] = "qspace";
    j["version"] = version();
    j["command"] = command_;
    j["params"] = params_;
    j["outputs"] = outputs_;
    j["results"] = results_;
    write_file(path, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::map<std::string, std::string> params_;
  std::vector<std::string> outputs_;
  json results_ = json::object();
};

fs::path manifest_for_file(const std::string& override_path, const fs::path& out) {
  return override_path.empty() ? fs::path(out.string() + ".manifest.json") : fs::path(override_path);
}

fs::path manifest_for_dir(const std::string& override_path, const fs::path& dir) {
  return override_path.empty() ? dir / "manifest.json" : fs::path(override_path);
}

void write_report(const Report& r, const fs::path& out) {
  if (out.extension() == ".csv") r.write_csv(out);
  else r.write_text(out);
}

Mask mask_from_volume(const fs::path& path, const Dims& expected) {
  auto [dims, values] = read_scalar_qvol(path);
  if (!(dims == expected)) throw Error(path.string() + ": mask dimensions differ from the volume");
  Mask m(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) m[static_cast<std::size_t>(i)] = values(i) != 0.0;
  return m;
}

struct Common {
  int threads = 0;
  std::string config;
  std::string manifest;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--threads", c.threads, "Worker threads (0: QSPACE_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--config", c.config, "Flat key = value file of flags for this subcommand");
  sub->add_option("--manifest", c.manifest, "Manifest path (default next to the output)");
}

// --- subcommands -----------------------------------------------------------

struct DesignArgs {
  int n = 0;
  std::uint64_t seed = 0;
  int max_iters = 20000;
  std::string out;
};

void run_design(const DesignArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  DesignConfig cfg;
  cfg.n = a.n;
  cfg.seed = a.seed;
  cfg.max_iters = a.max_iters;
  const DesignTrace trace = electrostatic_design_trace(cfg);
  write_directions_csv(a.out, trace.dirs);
  m.output(a.out);
  const double energy = a.n > 1 ? coulomb_energy(trace.dirs) : 0.0;
  m.results()["energy"] = energy;
  m.results()["iterations"] = trace.iterations;
  m.results()["min_separation_deg"] =
      a.n > 1 ? json(trace.dirs.min_separation() * 180.0 / M_PI) : json("inf");
  m.write(manifest_for_file(c.manifest, a.out));
  out << "wrote " << a.n << " directions to " << a.out << " (energy " << format_double(energy) << ")\n";
}

struct PhantomArgs {
  std::string preset = "crossing:60";
  std::string dims = "32";
  int n_dirs = 60;
  std::uint64_t seed = 0;
  double b_value = 1000.0;
  double radius = 0.0;
  double roi_depth = 2.0;
  double snr = kNoNoise;
  std::uint64_t noise_seed = 1;
  std::string out;

  PhantomSpec spec() const {
    PhantomSpec s = parse_preset(preset);
    s.dims = parse_dims(dims);
    s.n_dirs = n_dirs;
    s.seed = seed;
    s.b_value = b_value;
    s.radius = radius;
    s.roi_depth = roi_depth;
    return s;
  }
};

void add_phantom_options(CLI::App* sub, PhantomArgs& a) {
  sub->add_option("--preset", a.preset, "straight, arc, crossing or crossing:<deg>");
  sub->add_option("--dims", a.dims, "N or X,Y,Z");
  sub->add_option("--n-dirs", a.n_dirs, "Fully sampled directions")->check(CLI::PositiveNumber);
  sub->add_option("--b-value", a.b_value, "s/mm^2")->check(CLI::PositiveNumber);
  sub->add_option("--radius", a.radius, "Bundle radius in voxels (0: automatic)")->check(CLI::NonNegativeNumber);
  sub->add_option("--roi-depth", a.roi_depth, "Centerline length of each endpoint ROI");
  sub->add_option("--noise-seed", a.noise_seed, "Seed of the Rician noise");
}

void run_phantom(const PhantomArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const Phantom p = generate_phantom(a.spec());
  const DwiVolume noisy = add_rician_noise(p.volume, a.snr, a.noise_seed);
  const fs::path dir(a.out);
  write_qvol(dir / "dwi.qvh", noisy);
  write_truth(dir / "truth.json", p.truth, a.spec());
  write_directions_csv(dir / "dirs.csv", p.volume.dirs);
  for (const char* f : {"dwi.qvh", "truth.json", "dirs.csv"}) m.output(dir / f);
  m.results()["bundles"] = p.truth.bundles.size();
  m.results()["voxels"] = p.volume.voxels();
  m.write(manifest_for_dir(c.manifest, dir));
  out << "wrote " << preset_name(a.spec()) << " phantom to " << dir.string() << "\n";
}

struct TrainArgs {
  PhantomArgs phantom;
  double snr = 20.0;
  int train_volumes = 8;
  int validation_volumes = 2;
  std::string train_files;
  std::string validation_files;
  double af = 3.0;
  std::string mode = "learned";
  std::string recon = "linear";
  int epochs = 50;
  int patience = 10;
  double min_improvement = 1e-5;
  double lr_dirs = kDefaultLrDirs;
  double lr_recon = kDefaultLrRecon;
  std::uint64_t seed = 0;
  std::string loss = "l2";
  double lambda = kDefaultShLambda;
  int sub_order = -1;
  int recon_order = -1;
  std::string out;
};

void write_history(const fs::path& path, const TrainResult& r) {
  std::string s = "epoch,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < r.train_loss.size(); ++e)
    s += std::to_string(e) + "," + format_double(r.train_loss[e]) + "," + format_double(r.validation_loss[e]) + "\n";
  write_file(path, s);
}

void write_dir_history(const fs::path& path, const TrainResult& r) {
  std::string s = "epoch,index,theta,phi\n";
  for (std::size_t e = 0; e < r.dir_history.size(); ++e)
    for (std::size_t i = 0; i < r.dir_history[e].size(); ++i)
      s += std::to_string(e) + "," + std::to_string(i) + "," + format_double(r.dir_history[e][i].theta) + "," +
           format_double(r.dir_history[e][i].phi) + "\n";
  write_file(path, s);
}

void run_train(const TrainArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  TrainConfig cfg;
  cfg.af = a.af;
  cfg.mode = parse_direction_mode(a.mode);
  cfg.recon = parse_recon_mode(a.recon);
  cfg.epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.min_improvement = a.min_improvement;
  cfg.lr_dirs = a.lr_dirs;
  cfg.lr_recon = a.lr_recon;
  cfg.seed = a.seed;
  cfg.loss = parse_loss_kind(a.loss);
  cfg.sh = {a.sub_order, a.recon_order, a.lambda};
  cfg.validate();

  std::unique_ptr<PhantomSet> set;
  Dataset data;
  if (a.train_files.empty() != a.validation_files.empty())
    throw UsageError("--train-files and --validation-files go together");
  if (!a.train_files.empty()) {
    for (const auto& f : split_list(a.train_files)) data.train.push_back(read_qvol(f));
    for (const auto& f : split_list(a.validation_files)) data.validation.push_back(read_qvol(f));
  } else {
    PhantomSetConfig pc;
    pc.phantom = a.phantom.spec();
    pc.train_volumes = a.train_volumes;
    pc.validation_volumes = a.validation_volumes;
    pc.snr = a.snr;
    pc.noise_seed = a.phantom.noise_seed;
    set = std::make_unique<PhantomSet>(make_phantom_set(pc));
    data = set->data;
  }

  const TrainResult r = train_joint(data, cfg);
  const fs::path dir(a.out);
  write_directions_csv(dir / "dirs.csv", r.dirs);
  write_directions_csv(dir / "initial_dirs.csv", r.initial_dirs);
  write_recon_params(dir / "params.json", r.params);
  write_history(dir / "history.csv", r);
  write_dir_history(dir / "dir_history.csv", r);

  Report report;
  report.add("af", a.af);
  report.add("n", static_cast<long long>(r.dirs.size()));
  report.add("mode", a.mode);
  report.add("recon", a.recon);
  report.add("epochs_run", static_cast<long long>(r.train_loss.size()));
  report.add("best_epoch", static_cast<long long>(r.best_epoch));
  report.add("validation_loss", r.validation_loss.empty() ? 0.0 : r.validation_loss[static_cast<std::size_t>(r.best_epoch)]);
  if (set) report.add("validation_psnr", validation_psnr(*set, r.dirs, r.params, cfg.sh));
  report.write_text(dir / "report.txt");
  report.write_csv(dir / "report.csv");
  for (const char* f : {"dirs.csv", "initial_dirs.csv", "params.json", "history.csv", "dir_history.csv",
                        "report.txt", "report.csv"})
    m.output(dir / f);

  m.results()["steps"] = r.steps;
  m.results()["best_epoch"] = r.best_epoch;
  m.results()["train_loss"] = numbers(r.train_loss);
  m.results()["validation_loss"] = numbers(r.validation_loss);
  for (const auto& [k, v] : report.fields()) m.results()["report"][k] = v;
  m.write(manifest_for_dir(c.manifest, dir));
  out << report.text();
}

struct ResampleArgs {
  std::string in;
  std::string dirs;
  int order = -1;
  double lambda = kDefaultShLambda;
  bool no_clamp = false;
  std::string recon = "none";
  std::string params;
  int recon_order = -1;
  std::string out;
};

void run_resample(const ResampleArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const DwiVolume x = read_qvol(a.in);
  const DirectionSet dirs = read_directions_csv(a.dirs);
  const int order = a.order >= 0 ? a.order : default_sh_order(x.channels());
  DwiVolume y = subsample(x, dirs, order, a.lambda, !a.no_clamp);
  if (a.recon != "none") {
    ReconstructionParams p;
    p.mode = parse_recon_mode(a.recon);
    if (p.mode == ReconMode::linear) {
      if (a.params.empty()) throw UsageError("--recon linear needs --params");
      p = read_recon_params(a.params);
      if (p.mode != ReconMode::linear) throw Error(a.params + ": not linear reconstruction parameters");
    }
    const int recon_order = a.recon_order >= 0 ? a.recon_order : default_sh_order(dirs.size());
    y = reconstruct(y, p, x.dirs, recon_order, a.lambda);
  }
  write_qvol(a.out, y);
  m.output(a.out);
  m.results()["channels"] = y.channels();
  m.results()["order"] = order;
  m.write(manifest_for_file(c.manifest, a.out));
  out << "wrote " << y.channels() << "-channel volume to " << a.out << "\n";
}

struct TrackArgs {
  std::string in;
  std::string truth;
  TractographyOptions options;
  std::string out;
};

fs::path labels_path(const fs::path& trk) {
  return trk.parent_path() / (trk.stem().string() + "_labels.csv");
}

void run_track(const TrackArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const DwiVolume x = read_qvol(a.in);
  const fs::path trk(a.out);
  long long count = 0;
  if (!a.truth.empty()) {
    const auto [truth, spec] = read_truth(a.truth);
    if (!(truth.dims == x.dims)) throw Error("truth and volume dimensions differ");
    const LabeledTractogram l = track_phantom(x, truth, a.options);
    write_qtrk(trk, l.tractogram);
    write_labels_csv(labels_path(trk), l.tractogram.labels);
    m.output(labels_path(trk));
    count = static_cast<long long>(l.tractogram.streamlines.size());
  } else {
    const Tractogram t = run_tractography(x, mask_seeds(x.dims, brain_mask(x)), a.options);
    write_qtrk(trk, t);
    count = static_cast<long long>(t.streamlines.size());
  }
  m.output(trk);
  m.results()["streamlines"] = count;
  m.write(manifest_for_file(c.manifest, trk));
  out << "wrote " << count << " streamlines to " << trk.string() << "\n";
}

struct ScorePsnrArgs {
  std::string in;
  std::string ref;
  std::string mask;
  std::string out;
};

void run_score_psnr(const ScorePsnrArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const DwiVolume xhat = read_qvol(a.in);
  const DwiVolume x = read_qvol(a.ref);
  const Mask mask = a.mask.empty() ? brain_mask(x) : mask_from_volume(a.mask, x.dims);
  Report r;
  r.add("psnr", psnr(xhat, x, mask));
  write_report(r, a.out);
  m.output(a.out);
  m.results()["psnr"] = r.fields()[0].second;
  m.write(manifest_for_file(c.manifest, a.out));
  out << r.text();
}

struct ScoreBdArgs {
  std::string test;
  std::string reference;
  std::string truth;
  int bins = kDefaultBhattacharyyaBins;
  std::string out;
};

LabeledTractogram labeled_from_file(const fs::path& trk, const PhantomTruth& truth) {
  return assign_bundles(read_qtrk(trk), truth);
}

void run_score_bd(const ScoreBdArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const auto [truth, spec] = read_truth(a.truth);
  const LabeledTractogram test = labeled_from_file(a.test, truth);
  const LabeledTractogram ref = labeled_from_file(a.reference, truth);
  Report r;
  r.add("mean_bd", mean_bundle_distance(ref, test, truth.bundles.size(), a.bins));
  for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
    const auto tb = bundle_streamlines(test, static_cast<int>(b));
    const auto rb = bundle_streamlines(ref, static_cast<int>(b));
    const double d = tb.empty() || rb.empty() ? kBhattacharyyaCap : bhattacharyya_distance(rb, tb, a.bins);
    r.add("bd_bundle_" + std::to_string(b), d);
  }
  write_report(r, a.out);
  m.output(a.out);
  for (const auto& [k, v] : r.fields()) m.results()[k] = v;
  m.write(manifest_for_file(c.manifest, a.out));
  out << r.text();
}

struct ScoreConnectionsArgs {
  std::string in;
  std::string truth;
  std::string out;
};

void run_score_connections(const ScoreConnectionsArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const auto [truth, spec] = read_truth(a.truth);
  const ConnectionReport s = connection_scores(labeled_from_file(a.in, truth), truth);
  Report r;
  r.add("vc", s.vc);
  r.add("ic", s.ic);
  r.add("nc", s.nc);
  r.add_int("vb", s.vb);
  r.add_int("ib", s.ib);
  r.add("ol", s.ol);
  r.add("or", s.or_);
  r.add("f1", s.f1);
  r.add_int("streamlines", s.streamlines);
  r.add_int("overreach_capped", s.overreach_capped);
  write_report(r, a.out);
  m.output(a.out);
  for (const auto& [k, v] : r.fields()) m.results()[k] = v;
  m.write(manifest_for_file(c.manifest, a.out));
  out << r.text();
}

struct ExportArgs {
  std::string dirs;
  double b_value = 1000.0;
  int n_b0 = 1;
  std::string out;
};

void run_export(const ExportArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  const GradientTable t = export_bvec(read_directions_csv(a.dirs), a.b_value, a.n_b0);
  const fs::path dir(a.out);
  write_file(dir / "bvecs", t.bvecs);
  write_file(dir / "bvals", t.bvals);
  m.output(dir / "bvecs");
  m.output(dir / "bvals");
  m.write(manifest_for_dir(c.manifest, dir));
  out << "wrote " << (dir / "bvecs").string() << " and " << (dir / "bvals").string() << "\n";
}

struct PlotArgs {
  std::string dirs;
  std::string compare;
  std::string color = "#1f77b4";
  std::string compare_color = "#d62728";
  std::string label;
  std::string compare_label;
  std::string out;
};

void run_plot(const PlotArgs& a, Manifest& m, const Common& c, std::ostream& out) {
  std::vector<PlotSet> sets{{read_directions_csv(a.dirs), a.color, a.label}};
  if (!a.compare.empty()) sets.push_back({read_directions_csv(a.compare), a.compare_color, a.compare_label});
  write_file(a.out, plot_dirs_svg(sets));
  m.output(a.out);
  m.write(manifest_for_file(c.manifest, a.out));
  out << "wrote " << a.out << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned q-space sampling toolkit", "qspace"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  std::map<std::string, std::function<void(Manifest&)>> runners;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, common);
    return s;
  };

  DesignArgs design;
  {
    CLI::App* s = sub("design", "Electrostatic repulsion direction design");
    s->add_option("--n", design.n, "Number of directions")->required()->check(CLI::PositiveNumber);
    s->add_option("--seed", design.seed, "Seed of the random start");
    s->add_option("--max-iters", design.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
    s->add_option("--out", design.out, "Direction CSV")->required();
    runners["design"] = [&](Manifest& m) { run_design(design, m, common, out); };
  }

  PhantomArgs phantom;
  {
    CLI::App* s = sub("phantom", "Synthetic multi-tensor phantom with ground truth");
    add_phantom_options(s, phantom);
    s->add_option("--seed", phantom.seed, "Seed of the direction design");
    s->add_option("--snr", phantom.snr, "Signal-to-noise ratio (inf: noiseless)");
    s->add_option("--out", phantom.out, "Output directory")->required();
    runners["phantom"] = [&](Manifest& m) { run_phantom(phantom, m, common, out); };
  }

  TrainArgs train;
  {
    CLI::App* s = sub("train", "Joint direction and reconstruction training");
    add_phantom_options(s, train.phantom);
    s->add_option("--design-seed", train.phantom.seed, "Seed of the phantom direction design");
    s->add_option("--snr", train.snr, "Signal-to-noise ratio of the phantom set");
    s->add_option("--train-volumes", train.train_volumes)->check(CLI::PositiveNumber);
    s->add_option("--validation-volumes", train.validation_volumes)->check(CLI::PositiveNumber);
    s->add_option("--train-files", train.train_files, "Comma-separated QVOL headers (instead of a phantom set)");
    s->add_option("--validation-files", train.validation_files, "Comma-separated QVOL headers");
    s->add_option("--af", train.af, "Acceleration factor N / n")->check(CLI::Range(1.0, 1e6));
    s->add_option("--mode", train.mode, "fixed or learned")->check(CLI::IsMember({"fixed", "learned"}));
    s->add_option("--recon", train.recon, "identity, sh-interp or linear")
        ->check(CLI::IsMember({"identity", "sh-interp", "linear"}));
    s->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber);
    s->add_option("--patience", train.patience)->check(CLI::PositiveNumber);
    s->add_option("--min-improvement", train.min_improvement)->check(CLI::NonNegativeNumber);
    s->add_option("--lr-dirs", train.lr_dirs)->check(CLI::NonNegativeNumber);
    s->add_option("--lr-recon", train.lr_recon)->check(CLI::NonNegativeNumber);
    s->add_option("--seed", train.seed, "Seed of the initial directions and batch order");
    s->add_option("--loss", train.loss, "l2 or mse")->check(CLI::IsMember({"l2", "mse"}));
    s->add_option("--lambda", train.lambda, "SH regularization weight")->check(CLI::NonNegativeNumber);
    s->add_option("--sub-order", train.sub_order, "SH order of the sub-sampling fit (-1: default)");
    s->add_option("--recon-order", train.recon_order, "SH order of sh-interp (-1: default)");
    s->add_option("--out", train.out, "Output directory")->required();
    runners["train"] = [&](Manifest& m) { run_train(train, m, common, out); };
  }

  ResampleArgs resample;
  {
    CLI::App* s = sub("resample", "Sub-sample a volume at new directions, optionally reconstructing");
    s->add_option("--in", resample.in, "Input QVOL header")->required();
    s->add_option("--dirs", resample.dirs, "Direction CSV")->required();
    s->add_option("--order", resample.order, "SH order of the fit (-1: default)");
    s->add_option("--lambda", resample.lambda)->check(CLI::NonNegativeNumber);
    s->add_flag("--no-clamp", resample.no_clamp, "Keep negative interpolated values");
    s->add_option("--recon", resample.recon, "none, identity, sh-interp or linear")
        ->check(CLI::IsMember({"none", "identity", "sh-interp", "linear"}));
    s->add_option("--params", resample.params, "Linear reconstruction parameters (JSON)");
    s->add_option("--recon-order", resample.recon_order, "SH order of sh-interp (-1: default)");
    s->add_option("--out", resample.out, "Output QVOL header")->required();
    runners["resample"] = [&](Manifest& m) { run_resample(resample, m, common, out); };
  }

  TrackArgs track;
  {
    CLI::App* s = sub("track", "CSA ODF peak tractography");
    s->add_option("--in", track.in, "Input QVOL header")->required();
    s->add_option("--truth", track.truth, "Phantom truth: seeds at fiber voxels and writes labels");
    s->add_option("--step", track.options.tracking.step_size)->check(CLI::PositiveNumber);
    s->add_option("--angle", track.options.tracking.angle_thresh_deg, "Maximum turn per step (deg)");
    s->add_option("--gfa-thresh", track.options.tracking.gfa_thresh);
    s->add_option("--max-steps", track.options.tracking.max_steps)->check(CLI::PositiveNumber);
    s->add_option("--odf-order", track.options.odf_order, "(-1: default)");
    s->add_option("--lambda", track.options.lambda)->check(CLI::NonNegativeNumber);
    s->add_option("--peak-threshold", track.options.peaks.rel_threshold);
    s->add_option("--peak-separation", track.options.peaks.min_separation_deg);
    s->add_option("--max-peaks", track.options.peaks.max_peaks)->check(CLI::PositiveNumber);
    s->add_option("--out", track.out, "Output QTRK file")->required();
    runners["track"] = [&](Manifest& m) { run_track(track, m, common, out); };
  }

  ScorePsnrArgs score_psnr;
  {
    CLI::App* s = sub("score-psnr", "PSNR of a reconstruction");
    s->add_option("--in", score_psnr.in, "Reconstructed QVOL header")->required();
    s->add_option("--ref", score_psnr.ref, "Reference QVOL header")->required();
    s->add_option("--mask", score_psnr.mask, "Scalar QVOL mask (default: brain mask of the reference)");
    s->add_option("--out", score_psnr.out, "Report (.txt or .csv)")->required();
    runners["score-psnr"] = [&](Manifest& m) { run_score_psnr(score_psnr, m, common, out); };
  }

  ScoreBdArgs score_bd;
  {
    CLI::App* s = sub("score-bd", "Bundle distance between two tractograms");
    s->add_option("--test", score_bd.test, "Test QTRK file")->required();
    s->add_option("--reference", score_bd.reference, "Reference QTRK file")->required();
    s->add_option("--truth", score_bd.truth, "Phantom truth JSON")->required();
    s->add_option("--bins", score_bd.bins)->check(CLI::PositiveNumber);
    s->add_option("--out", score_bd.out, "Report (.txt or .csv)")->required();
    runners["score-bd"] = [&](Manifest& m) { run_score_bd(score_bd, m, common, out); };
  }

  ScoreConnectionsArgs score_conn;
  {
    CLI::App* s = sub("score-connections", "Connectivity scores against the phantom truth");
    s->add_option("--in", score_conn.in, "QTRK file")->required();
    s->add_option("--truth", score_conn.truth, "Phantom truth JSON")->required();
    s->add_option("--out", score_conn.out, "Report (.txt or .csv)")->required();
    runners["score-connections"] = [&](Manifest& m) { run_score_connections(score_conn, m, common, out); };
  }

  ExportArgs export_args;
  {
    CLI::App* s = sub("export-bvec", "FSL bvecs / bvals gradient table");
    s->add_option("--dirs", export_args.dirs, "Direction CSV")->required();
    s->add_option("--b-value", export_args.b_value)->check(CLI::PositiveNumber);
    s->add_option("--n-b0", export_args.n_b0, "Leading b = 0 volumes")->check(CLI::NonNegativeNumber);
    s->add_option("--out", export_args.out, "Output directory")->required();
    runners["export-bvec"] = [&](Manifest& m) { run_export(export_args, m, common, out); };
  }

  PlotArgs plot;
  {
    CLI::App* s = sub("plot-dirs", "SVG top view of one or two direction sets");
    s->add_option("--dirs", plot.dirs, "Direction CSV")->required();
    s->add_option("--compare", plot.compare, "Second direction CSV");
    s->add_option("--color", plot.color);
    s->add_option("--compare-color", plot.compare_color);
    s->add_option("--label", plot.label);
    s->add_option("--compare-label", plot.compare_label);
    s->add_option("--out", plot.out, "SVG file")->required();
    runners["plot-dirs"] = [&](Manifest& m) { run_plot(plot, m, common, out); };
  }

  try {
    std::vector<std::string> args = expand_config(args_in);
    // CLI11 consumes the arguments from the back.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    if (dynamic_cast<const CLI::ExtrasError*>(&e) || dynamic_cast<const CLI::RequiredError*>(&e))
      err << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    if (common.threads > 0) set_thread_count(common.threads);
    Manifest manifest(chosen->get_name(), *chosen);
    runners.at(chosen->get_name())(manifest);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int dispatch(int argc, const char* const* argv) {
  return dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace qspace::cli
