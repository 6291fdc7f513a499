#include "nlif/run.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nlif {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(fs::path path, const std::string& fingerprint,
                     const std::vector<std::string>& header)
    : path_(std::move(path)) {
  body_ = "# fingerprint=" + fingerprint + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) body_ += (i ? "," : "") + header[i];
  body_ += "\n";
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (row_open_) body_ += ',';
  body_ += s;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  body_ += '\n';
  row_open_ = false;
}

fs::path CsvWriter::commit() {
  const fs::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << body_;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path_);
  return path_;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Artifacts {
 public:
  Artifacts(const RunConfig& cfg, fs::path dir, std::ostream* log)
      : cfg_(cfg), dir_(std::move(dir)), log_(log) {}

  CsvWriter open(const std::string& name, const std::vector<std::string>& header) const {
    return CsvWriter(dir_ / name, cfg_.fingerprint, header);
  }

  void keep(CsvWriter& w) {
    files_.push_back(w.commit());
    say("wrote " + files_.back().string());
  }

  void say(const std::string& msg) const {
    if (log_ != nullptr) *log_ << msg << '\n';
  }

  const std::vector<fs::path>& files() const { return files_; }

  void trajectory(const HybridTrajectory& traj, const std::string& suffix) {
    const auto windowed = windowed_rates(traj, cfg_.k_rec);
    auto rates = open("rates" + suffix + ".csv", {"t", "mode", "rate", "rate_windowed"});
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
      const auto& r = traj.records[k];
      rates.cell(r.time).cell(to_string(r.mode)).cell(r.rate).cell(windowed[k]).end_row();
    }
    keep(rates);

    density(traj.grid, terminal_density(traj), "density" + suffix + ".csv");
    for (const auto& [step, p] : traj.snapshots) {
      density(traj.grid, p, "density" + suffix + "_k" + std::to_string(step) + ".csv");
    }

    auto events = open("events" + suffix + ".csv", {"t", "direction", "step", "traceback"});
    for (const auto& e : traj.events) {
      events.cell(static_cast<double>(e.trigger_step) * traj.dt)
          .cell(to_string(e.direction))
          .cell(e.trigger_step)
          .cell(e.traceback)
          .end_row();
    }
    keep(events);

    bool any_micro = false;
    for (const auto& r : traj.records) any_micro = any_micro || r.mode == Mode::micro;
    if (any_micro) {
      auto mfe = open("mfe" + suffix + ".csv", {"t", "size", "proportion", "depth", "violations"});
      for (const auto& r : traj.records) {
        if (r.mfe.size == 0) continue;
        mfe.cell(r.time)
            .cell(r.mfe.size)
            .cell(r.mfe.proportion)
            .cell(r.mfe.depth)
            .cell(r.mfe.violations)
            .end_row();
      }
      keep(mfe);
    }
  }

  void density(const VoltageGrid& grid, const std::vector<double>& p, const std::string& name) {
    auto out = open(name, {"v_center", "p"});
    for (std::size_t i = 0; i < p.size(); ++i) {
      out.cell(grid.node(static_cast<int>(i) + 1)).cell(p[i]).end_row();
    }
    keep(out);
  }

  void bias(const std::vector<BiasRow>& rows, int replicas) {
    auto out = open("bias.csv", {"size", "order", "test", "bias", "replicas"});
    for (const auto& r : rows) {
      out.cell(r.size).cell(r.order).cell(r.test).cell(r.bias).cell(replicas).end_row();
    }
    keep(out);
  }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  std::ostream* log_;
  std::vector<fs::path> files_;
};

Observable observable_of_order(int order) {
  if (order == 2) return Observable::second();
  if (order == 3) return Observable::third();
  return Observable::first();
}

void dispatch(const RunConfig& cfg, Artifacts& art, nlohmann::json& notes) {
  const RandomSource root{cfg.seed, 0};
  const auto& h = cfg.hybrid;
  switch (cfg.experiment) {
    case Experiment::run_micro:
      art.trajectory(run_pure(Mode::micro, h, root), "");
      break;
    case Experiment::run_macro:
      art.trajectory(run_pure(Mode::macro, h, root), "");
      break;
    case Experiment::run_hybrid:
      art.trajectory(run_hybrid(h, root), "");
      break;
    case Experiment::tests_1_4: {
      FourTests sample;
      const auto rows = bias_rows(h, cfg.replicas, root, &sample);
      art.bias(rows, cfg.replicas);
      const auto reference = terminal_density(sample.runs[0]);
      const auto reference_rate = windowed_rates(sample.runs[0], cfg.k_rec);
      const auto from = static_cast<std::size_t>(std::ceil(0.5 / h.dt - 1e-9));
      auto consistency = art.open("consistency.csv", {"test", "l1_density", "sup_rate_after_0.5"});
      for (int t = 0; t < 4; ++t) {
        const auto& run = sample.runs[static_cast<std::size_t>(t)];
        art.trajectory(run, "_test" + std::to_string(t + 1));
        const auto rate = windowed_rates(run, cfg.k_rec);
        consistency.cell(t + 1)
            .cell(l1_distance(reference, terminal_density(run), h.grid))
            .cell(sup_distance(reference_rate, rate, std::min(from, rate.size())))
            .end_row();
      }
      art.keep(consistency);
      notes["density_centering"] = "centred observables on a density use its own first moment";
      break;
    }
    case Experiment::bias_study: {
      const auto report = bias_study(h, cfg.sizes, cfg.replicas, root);
      art.bias(report.rows, report.replicas);
      notes["density_centering"] = "centred observables on a density use its own first moment";
      break;
    }
    case Experiment::threshold_sweep: {
      auto summary = art.open("threshold.csv", {"b", "j_max", "found"});
      auto evals = art.open("evaluations.csv", {"b", "j_max", "peak_rate"});
      for (const double b : cfg.sweep_b) {
        HybridConfig c = h;
        c.params.b = b;
        c.params.kick = b / static_cast<double>(c.params.size);
        art.say("threshold search at b = " + format_number(b));
        const auto res = amplitude_threshold_search(c, cfg.search, root);
        summary.cell(b).cell(res.amplitude.value_or(std::nan(""))).cell(res.amplitude ? 1 : 0).end_row();
        for (const auto& [amp, peak] : res.evaluations) evals.cell(b).cell(amp).cell(peak).end_row();
      }
      art.keep(summary);
      art.keep(evals);
      notes["threshold_search"] =
          "lattice 0, step, 2 step, ... up to threshold.max; the first bracketing interval is "
          "rescanned at step/subdivisions; peak of the k_rec-window-averaged micro rate; common "
          "random numbers for every amplitude";
      break;
    }
    case Experiment::refractory_study: {
      const auto res = refractory_divergence(h, cfg.replicas, cfg.k_rec, root);
      auto curves = art.open("divergence.csv", {"t", "rate_refractory", "rate_no_refractory"});
      for (std::size_t k = 0; k < res.refractory.size(); ++k) {
        curves.cell(static_cast<double>(k) * h.dt)
            .cell(res.refractory[k])
            .cell(res.no_refractory[k])
            .end_row();
      }
      art.keep(curves);
      const auto* pulse = std::get_if<GaussianPulse>(&h.input.kind());
      auto summary = art.open("divergence_summary.csv",
                              {"b", "j_max", "sup_distance", "violations", "replicas"});
      summary.cell(h.params.b)
          .cell(pulse != nullptr ? pulse->amplitude : std::nan(""))
          .cell(res.sup_distance)
          .cell(res.violations)
          .cell(cfg.replicas)
          .end_row();
      art.keep(summary);
      break;
    }
    case Experiment::mc_scaling: {
      const auto init = discretize_gaussian(h.init, h.grid, h.params);
      const PiecewiseUniformDensity rho(h.grid, init.density);
      const auto res = mc_scaling_test(rho, cfg.sizes, cfg.replicas,
                                       observable_of_order(cfg.observable_order), root);
      auto rows = art.open("scaling.csv", {"size", "rms_error"});
      for (std::size_t i = 0; i < res.sizes.size(); ++i) rows.cell(res.sizes[i]).cell(res.rms_error[i]).end_row();
      art.keep(rows);
      auto fit = art.open("scaling_fit.csv", {"order", "slope", "slope_stderr", "replicas"});
      fit.cell(cfg.observable_order).cell(res.slope).cell(res.slope_stderr).cell(cfg.replicas).end_row();
      art.keep(fit);
      break;
    }
    case Experiment::diffusion_check: {
      const auto res = validate_diffusion_approximation(
          RateProfile::constant(cfg.diffusion_rate, h.horizon()), cfg.diffusion_kick, h.params.size,
          h.horizon(), cfg.replicas, root);
      auto out = art.open("diffusion.csv", {"quantity", "empirical", "expected", "band", "within"});
      out.cell("mean").cell(res.mean).cell(res.expected_mean).cell(res.mean_band).cell(res.mean_ok ? 1 : 0).end_row();
      out.cell("variance")
          .cell(res.variance)
          .cell(res.expected_variance)
          .cell(res.variance_band)
          .cell(res.variance_ok ? 1 : 0)
          .end_row();
      art.keep(out);
      break;
    }
    case Experiment::benchmark: {
      const auto rows = benchmark(cfg.benchmark_name, h, cfg.sizes, root);
      auto out = art.open("benchmark.csv", {"experiment", "size", "micro_seconds", "hybrid_seconds",
                                            "speedup", "micro_steps_in_hybrid"});
      for (const auto& r : rows) {
        out.cell(r.experiment)
            .cell(r.size)
            .cell(r.micro_seconds)
            .cell(r.hybrid_seconds)
            .cell(r.speedup)
            .cell(r.micro_steps_in_hybrid)
            .end_row();
      }
      art.keep(out);
      notes["timing"] = "wall-clock seconds; not reproducible across runs";
      break;
    }
  }
}

}  // namespace

std::vector<fs::path> run_experiment(const RunConfig& config, const fs::path& out, std::ostream* log) {
  fs::create_directories(out);
  Artifacts art(config, out, log);
  nlohmann::json meta;
  meta["fingerprint"] = config.fingerprint;
  meta["experiment"] = to_string(config.experiment);
  meta["seed"] = config.seed;
  meta["settings"] = config.settings;
  meta["started_at"] = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json notes = nlohmann::json::object();
  dispatch(config, art, notes);
  meta["finished_at"] = utc_now();
  meta["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  meta["notes"] = notes;
  std::vector<std::string> names;
  for (const auto& f : art.files()) names.push_back(f.filename().string());
  meta["files"] = names;

  const fs::path tmp = out / "meta.json.tmp";
  {
    std::ofstream m(tmp, std::ios::trunc);
    m << meta.dump(2) << '\n';
    if (!m) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, out / "meta.json");
  return art.files();
}

VerifyReport verify_artifacts(const fs::path& dir, const std::string& expected) {
  if (!fs::is_directory(dir)) throw ConfigError("verify: " + dir.string() + " is not a directory");
  VerifyReport report;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string first;
    std::getline(in, first);
    ++report.checked;
    const std::string prefix = "# fingerprint=";
    const auto found = first.rfind(prefix, 0) == 0 ? first.substr(prefix.size()) : "<none>";
    if (found != expected) report.mismatches.push_back(f.filename().string() + ": " + found);
  }
  return report;
}

}  // namespace nlif
