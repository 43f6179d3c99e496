/* Copyright 2026 The uapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// uapseg command-line driver. Talks to the library exclusively through the
// C API in uapseg/uapseg.h.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "uapseg/uapseg.h"

namespace {

namespace fs = std::filesystem;

// Failure carrying a library status; main() maps it to the exit code.
struct CommandError : std::runtime_error {
  CommandError(uapseg_status s, const std::string& msg)
      : std::runtime_error(msg), status(s) {}
  uapseg_status status;
};

void Check(uapseg_status s, const std::string& context) {
  if (s != UAPSEG_OK) {
    throw CommandError(s, context + ": " + uapseg_status_name(s) + ": " +
                              uapseg_last_error());
  }
}

[[noreturn]] void Usage(const std::string& msg) {
  throw CommandError(UAPSEG_ERR_USAGE, msg);
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr =
    std::unique_ptr<uapseg_dataset, Deleter<uapseg_dataset, uapseg_dataset_free>>;
using ModelPtr =
    std::unique_ptr<uapseg_model, Deleter<uapseg_model, uapseg_model_free>>;
using PertPtr = std::unique_ptr<uapseg_perturbation,
                                Deleter<uapseg_perturbation, uapseg_perturbation_free>>;
using RunPtr = std::unique_ptr<uapseg_run, Deleter<uapseg_run, uapseg_run_free>>;
using ReportPtr =
    std::unique_ptr<uapseg_report, Deleter<uapseg_report, uapseg_report_free>>;

// Accepts "0.0392", "10/255" or "10".
double ParseFraction(const std::string& text) {
  try {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return std::stod(text);
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  } catch (const std::exception&) {
    Usage("not a number: " + text);
  }
}

std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::string Fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string Timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

// Plain-text key=value run manifest.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv)
      : command_(std::move(command)) {
    std::string joined;
    for (const auto& a : argv) joined += (joined.empty() ? "" : " ") + a;
    Set("command", command_);
    Set("argv", joined);
    Set("library_version", uapseg_version());
    Set("started", Timestamp());
  }
  void Set(const std::string& k, const std::string& v) {
    entries_.emplace_back(k, v);
  }
  void AddRun(const uapseg_run* run, const std::string& prefix = "") {
    for (size_t i = 0; i < uapseg_run_manifest_size(run); ++i) {
      const char* k = nullptr;
      const char* v = nullptr;
      Check(uapseg_run_manifest_entry(run, i, &k, &v), "manifest");
      Set(prefix + k, v);
    }
  }
  void Write(const fs::path& path) {
    Set("finished", Timestamp());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw CommandError(UAPSEG_ERR_IO, "cannot write " + path.string());
    for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
  }

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandError(UAPSEG_ERR_IO, "cannot create " + dir.string());
}

DatasetPtr LoadData(const std::string& dir, int classes, int ignore) {
  uapseg_dataset* raw = nullptr;
  const fs::path root(dir);
  Check(uapseg_dataset_load((root / "images").c_str(), (root / "labels").c_str(),
                            classes, ignore, &raw),
        "loading " + dir);
  DatasetPtr ds(raw);
  for (size_t i = 0; i < uapseg_dataset_warning_count(ds.get()); ++i) {
    std::cerr << "warning: " << uapseg_dataset_warning(ds.get(), i) << "\n";
  }
  return ds;
}

std::string Fingerprint(const uapseg_dataset* ds) {
  char buf[17];
  Check(uapseg_dataset_fingerprint(ds, buf, sizeof(buf)), "fingerprint");
  return buf;
}

ModelPtr LoadModel(const std::string& path) {
  uapseg_model* raw = nullptr;
  Check(uapseg_model_load(path.c_str(), &raw), "loading model " + path);
  return ModelPtr(raw);
}

PertPtr LoadPert(const std::string& path) {
  uapseg_perturbation* raw = nullptr;
  Check(uapseg_perturbation_load(path.c_str(), &raw),
        "loading perturbation " + path);
  return PertPtr(raw);
}

ReportPtr Evaluate(const uapseg_model* m, const uapseg_dataset* ds,
                   const uapseg_perturbation* p) {
  uapseg_report* raw = nullptr;
  Check(uapseg_evaluate(m, ds, p, &raw), "evaluate");
  return ReportPtr(raw);
}

void WriteReport(const uapseg_report* r, const fs::path& stem) {
  Check(uapseg_report_write(r, (stem.string() + ".txt").c_str(),
                            (stem.string() + ".kv").c_str()),
        "writing report " + stem.string());
}

// Attack flags shared by train-uap, sweep-eps and ablate.
struct AttackFlags {
  std::string epsilon = "10/255";
  std::string step;  // empty: epsilon / 10
  int epochs = 5;
  int batch = 5;
  double k = 1.0;
  double lambda = 0.3;
  std::string terms = "pd,fd,ls";
  uint64_t seed = 0;

  void Register(CLI::App* app, bool with_epsilon, bool with_terms) {
    if (with_epsilon) {
      app->add_option("--epsilon", epsilon, "L-inf bound (e.g. 10/255)")
          ->capture_default_str();
    }
    app->add_option("--step", step, "sign-step size (default epsilon/10)");
    app->add_option("--epochs", epochs, "passes over the data")
        ->capture_default_str();
    app->add_option("--batch", batch, "batch size")->capture_default_str();
    app->add_option("--k", k, "weight of the low-frequency term")
        ->capture_default_str();
    app->add_option("--lambda", lambda, "weight of correctly classified pixels")
        ->capture_default_str();
    if (with_terms) {
      app->add_option("--terms", terms, "enabled terms: pd,fd,ls")
          ->capture_default_str();
    }
    app->add_option("--seed", seed, "batch-order seed")->capture_default_str();
  }

  uapseg_attack_config Resolve(double eps, const std::string& term_list,
                               uint64_t run_seed, int ignore) const {
    uapseg_attack_config cfg;
    uapseg_attack_config_default(&cfg);
    cfg.epsilon = eps;
    cfg.step_size = step.empty() ? eps / 10.0 : ParseFraction(step);
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.k = k;
    cfg.lambda = lambda;
    cfg.seed = run_seed;
    cfg.ignore_label = ignore;
    if (uapseg_parse_terms(term_list.c_str(), &cfg.terms) != UAPSEG_OK) {
      Usage(std::string("--terms: ") + uapseg_last_error());
    }
    return cfg;
  }
};

struct UapOutput {
  PertPtr pert;
  RunPtr run;
};

UapOutput RunAttack(const uapseg_model* model, const uapseg_dataset* data,
                    const uapseg_attack_config& cfg) {
  uapseg_perturbation* p = nullptr;
  uapseg_run* r = nullptr;
  Check(uapseg_train_uap(model, data, &cfg, nullptr, nullptr, &p, &r),
        "train-uap");
  return {PertPtr(p), RunPtr(r)};
}

void WriteHistory(const uapseg_run* run, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CommandError(UAPSEG_ERR_IO, "cannot write " + path.string());
  out << "step\tj_pd\tj_fd\tj_ls\tj_total\tce_mean\n" << std::setprecision(10);
  for (size_t i = 0; i < uapseg_run_history_size(run); ++i) {
    uapseg_loss l;
    Check(uapseg_run_history_get(run, i, &l), "history");
    out << i << "\t" << l.j_pd << "\t" << l.j_fd << "\t" << l.j_ls << "\t"
        << l.j_total << "\t" << l.ce_mean << "\n";
  }
}

// Reloads the written file and checks the epsilon invariant.
void VerifyPerturbationFile(const fs::path& path) {
  PertPtr p = LoadPert(path.string());
  double eps = 0.0;
  double max_abs = 0.0;
  Check(uapseg_perturbation_info(p.get(), nullptr, nullptr, nullptr, &eps,
                                 &max_abs),
        "perturbation info");
  if (max_abs > eps + 1e-9) {
    throw CommandError(UAPSEG_ERR_INTEGRITY,
                       "written perturbation violates its bound");
  }
}

struct Common {
  int classes = 4;
  int ignore = 255;
  std::vector<std::string> argv;
};

// ---------------------------------------------------------------------------

struct GenDataArgs {
  int n = 200;
  std::string size = "32x32";
  uint64_t seed = 0;
  std::string out;
};

void CmdGenData(const GenDataArgs& a, const Common& c) {
  const auto dims = Split(a.size, 'x');
  if (dims.size() != 2) Usage("--size must look like HxW");
  const int h = std::stoi(dims[0]);
  const int w = std::stoi(dims[1]);
  uapseg_dataset* raw = nullptr;
  Check(uapseg_dataset_generate(a.n, c.classes, h, w, a.seed, &raw),
        "gen-data");
  DatasetPtr all(raw);
  for (size_t i = 0; i < uapseg_dataset_warning_count(all.get()); ++i) {
    std::cerr << "note: " << uapseg_dataset_warning(all.get(), i) << "\n";
  }
  uapseg_dataset* train_raw = nullptr;
  uapseg_dataset* eval_raw = nullptr;
  Check(uapseg_dataset_split(all.get(), &train_raw, &eval_raw), "split");
  DatasetPtr train(train_raw);
  DatasetPtr eval(eval_raw);
  const fs::path out(a.out);
  EnsureDir(out);
  Check(uapseg_dataset_save(train.get(), (out / "train").c_str()), "save train");
  Check(uapseg_dataset_save(eval.get(), (out / "eval").c_str()), "save eval");

  int ch = 0, hh = 0, ww = 0;
  Check(uapseg_dataset_shape(all.get(), &ch, &hh, &ww), "shape");
  Manifest m("gen-data", c.argv);
  m.Set("n", std::to_string(a.n));
  m.Set("classes", std::to_string(c.classes));
  m.Set("requested_size", a.size);
  m.Set("size", std::to_string(hh) + "x" + std::to_string(ww));
  m.Set("seed", std::to_string(a.seed));
  m.Set("dataset_fingerprint", Fingerprint(all.get()));
  m.Set("train_fingerprint", Fingerprint(train.get()));
  m.Set("eval_fingerprint", Fingerprint(eval.get()));
  m.Set("train_examples", std::to_string(uapseg_dataset_size(train.get())));
  m.Set("eval_examples", std::to_string(uapseg_dataset_size(eval.get())));
  m.Set("outputs", (out / "train").string() + "," + (out / "eval").string());
  m.Write(out / "manifest.txt");
  std::cout << "wrote " << uapseg_dataset_size(train.get()) << " train and "
            << uapseg_dataset_size(eval.get()) << " eval pairs (" << hh << "x"
            << ww << ") to " << out << "\n"
            << "fingerprint " << Fingerprint(all.get()) << "\n";
}

struct TrainModelArgs {
  std::string data;
  std::string arch = "toyA";
  int epochs = 12;
  int batch = 8;
  double lr = 0.01;
  uint64_t seed = 0;
  std::string out;
};

void CmdTrainModel(const TrainModelArgs& a, const Common& c) {
  DatasetPtr ds = LoadData(a.data, c.classes, c.ignore);
  uapseg_model* raw = nullptr;
  Check(uapseg_model_create(a.arch.c_str(), c.classes, a.seed, &raw),
        "create model");
  ModelPtr model(raw);
  uapseg_train_config tc;
  uapseg_train_config_default(&tc);
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.learning_rate = a.lr;
  tc.seed = a.seed;
  tc.ignore_label = c.ignore;
  double acc = 0.0;
  Check(uapseg_model_train(model.get(), ds.get(), &tc, &acc), "train-model");
  Check(uapseg_model_save(model.get(), a.out.c_str()), "save model");

  Manifest m("train-model", c.argv);
  m.Set("model_id", uapseg_model_id(model.get()));
  m.Set("architecture", a.arch);
  m.Set("classes", std::to_string(c.classes));
  m.Set("parameters", std::to_string(uapseg_model_parameter_count(model.get())));
  m.Set("optimizer", "adam");
  m.Set("learning_rate", Fmt(a.lr));
  m.Set("lr_schedule", "constant");
  m.Set("epochs", std::to_string(a.epochs));
  m.Set("batch_size", std::to_string(a.batch));
  m.Set("seed", std::to_string(a.seed));
  m.Set("ignore_label", std::to_string(c.ignore));
  m.Set("dataset_fingerprint", Fingerprint(ds.get()));
  m.Set("final_pixel_accuracy", Fmt(acc));
  m.Set("outputs", a.out);
  m.Write(a.out + ".manifest.txt");
  std::cout << "model " << uapseg_model_id(model.get()) << " pixel accuracy "
            << std::fixed << std::setprecision(4) << acc << " -> " << a.out
            << "\n";
}

struct TrainUapArgs {
  std::string data;
  std::string model;
  AttackFlags attack;
  std::string out;
};

void CmdTrainUap(const TrainUapArgs& a, const Common& c) {
  DatasetPtr ds = LoadData(a.data, c.classes, c.ignore);
  ModelPtr model = LoadModel(a.model);
  const uapseg_attack_config cfg = a.attack.Resolve(
      ParseFraction(a.attack.epsilon), a.attack.terms, a.attack.seed, c.ignore);
  UapOutput r = RunAttack(model.get(), ds.get(), cfg);
  Check(uapseg_perturbation_save(r.pert.get(), a.out.c_str()),
        "save perturbation");
  VerifyPerturbationFile(a.out);
  WriteHistory(r.run.get(), a.out + ".history.tsv");

  Manifest m("train-uap", c.argv);
  m.AddRun(r.run.get());
  m.Set("outputs", a.out + "," + a.out + ".history.tsv");
  m.Write(a.out + ".manifest.txt");
  std::cout << "perturbation " << uapseg_perturbation_id(r.pert.get())
            << " after " << uapseg_run_history_size(r.run.get())
            << " steps -> " << a.out << "\n";
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::string pert;
  std::string out;
};

void CmdEval(const EvalArgs& a, const Common& c) {
  DatasetPtr ds = LoadData(a.data, c.classes, c.ignore);
  ModelPtr model = LoadModel(a.model);
  PertPtr pert;
  if (!a.pert.empty()) pert = LoadPert(a.pert);
  ReportPtr report = Evaluate(model.get(), ds.get(), pert.get());
  std::cout << uapseg_report_table(report.get());
  if (!a.out.empty()) {
    WriteReport(report.get(), a.out);
    Manifest m("eval", c.argv);
    m.Set("model_id", uapseg_model_id(model.get()));
    m.Set("perturbation", a.pert.empty() ? "benign" : a.pert);
    m.Set("dataset_fingerprint", Fingerprint(ds.get()));
    m.Set("miou", Fmt(uapseg_report_miou(report.get())));
    m.Set("outputs", a.out + ".txt," + a.out + ".kv");
    m.Write(a.out + ".manifest.txt");
  }
}

struct TransferArgs {
  std::string data;
  std::string models;
  std::string perts;
  std::string out;
};

void CmdTransfer(const TransferArgs& a, const Common& c) {
  DatasetPtr ds = LoadData(a.data, c.classes, c.ignore);
  const auto model_paths = Split(a.models, ',');
  const auto pert_paths = Split(a.perts, ',');
  if (model_paths.empty()) Usage("--models needs at least one checkpoint");
  std::vector<ModelPtr> models;
  std::vector<const uapseg_model*> model_ptrs;
  for (const auto& p : model_paths) {
    models.push_back(LoadModel(p));
    model_ptrs.push_back(models.back().get());
  }
  std::vector<PertPtr> perts;
  std::vector<const uapseg_perturbation*> pert_ptrs = {nullptr};  // benign row
  for (const auto& p : pert_paths) {
    perts.push_back(LoadPert(p));
    pert_ptrs.push_back(perts.back().get());
  }
  std::vector<double> matrix(pert_ptrs.size() * model_ptrs.size());
  Check(uapseg_transfer_matrix(pert_ptrs.data(), pert_ptrs.size(),
                               model_ptrs.data(), model_ptrs.size(), ds.get(),
                               matrix.data()),
        "transfer");

  std::ostringstream table;
  table << "source";
  for (const auto* m : model_ptrs) table << "\t" << uapseg_model_id(m);
  table << "\n";
  for (size_t i = 0; i < pert_ptrs.size(); ++i) {
    table << (i == 0 ? std::string("benign")
                     : std::string(uapseg_perturbation_trained_on(pert_ptrs[i])) +
                           ":" + uapseg_perturbation_id(pert_ptrs[i]));
    for (size_t j = 0; j < model_ptrs.size(); ++j) {
      table << "\t" << std::fixed << std::setprecision(4)
            << matrix[i * model_ptrs.size() + j];
    }
    table << "\n";
  }
  std::cout << table.str();
  if (!a.out.empty()) {
    std::ofstream(a.out + ".tsv") << table.str();
    Manifest m("transfer", c.argv);
    m.Set("dataset_fingerprint", Fingerprint(ds.get()));
    m.Set("models", a.models);
    m.Set("perturbations", a.perts);
    m.Set("outputs", a.out + ".tsv");
    m.Write(a.out + ".manifest.txt");
  }
}

// Shared driver for sweep-eps and ablate: one attack + report per cell.
struct GridArgs {
  std::string data;
  std::string eval_data;
  std::string model;
  AttackFlags attack;
  std::string values = "2/255,4/255,8/255,10/255";
  std::string grid = "pd;pd,fd;pd,fd,ls";
  std::string seeds = "0";
  std::string out;
};

struct Cell {
  std::string label;
  double epsilon;
  std::string terms;
};

void RunGrid(const std::string& command, const std::vector<Cell>& cells,
             const GridArgs& a, const Common& c) {
  DatasetPtr train = LoadData(a.data, c.classes, c.ignore);
  DatasetPtr eval = LoadData(a.eval_data.empty() ? a.data : a.eval_data,
                             c.classes, c.ignore);
  ModelPtr model = LoadModel(a.model);
  std::vector<uint64_t> seeds;
  for (const auto& s : Split(a.seeds, ',')) seeds.push_back(std::stoull(s));
  if (seeds.empty()) Usage("--seeds must list at least one seed");

  const fs::path out(a.out);
  EnsureDir(out);
  ReportPtr benign = Evaluate(model.get(), eval.get(), nullptr);
  WriteReport(benign.get(), out / "benign");

  std::ostringstream summary;
  summary << "cell\tepsilon\tterms\tseed\tadv_miou\tbenign_miou\n";
  Manifest m(command, c.argv);
  m.Set("model_id", uapseg_model_id(model.get()));
  m.Set("train_fingerprint", Fingerprint(train.get()));
  m.Set("eval_fingerprint", Fingerprint(eval.get()));
  for (const Cell& cell : cells) {
    std::vector<double> per_seed;
    for (uint64_t seed : seeds) {
      const uapseg_attack_config cfg =
          a.attack.Resolve(cell.epsilon, cell.terms, seed, c.ignore);
      UapOutput r = RunAttack(model.get(), train.get(), cfg);
      const std::string stem = cell.label + "_seed" + std::to_string(seed);
      const fs::path pert_path = out / (stem + ".uap");
      Check(uapseg_perturbation_save(r.pert.get(), pert_path.c_str()),
            "save perturbation");
      VerifyPerturbationFile(pert_path);
      WriteHistory(r.run.get(), out / (stem + ".history.tsv"));
      ReportPtr rep = Evaluate(model.get(), eval.get(), r.pert.get());
      WriteReport(rep.get(), out / stem);
      m.AddRun(r.run.get(), stem + ".");
      const double miou = uapseg_report_miou(rep.get());
      summary << cell.label << "\t" << Fmt(cell.epsilon) << "\t" << cell.terms
              << "\t" << seed << "\t" << std::fixed << std::setprecision(4)
              << miou << "\t" << uapseg_report_miou(benign.get()) << "\n";
      summary.unsetf(std::ios::fixed);
      std::cerr << command << " " << stem << " adv mIoU " << miou << "\n";
    }
  }
  std::ofstream(out / "summary.tsv") << summary.str();
  m.Set("outputs", (out / "summary.tsv").string());
  m.Write(out / "manifest.txt");
  std::cout << summary.str();
}

void CmdSweepEps(const GridArgs& a, const Common& c) {
  std::vector<Cell> cells;
  for (const auto& v : Split(a.values, ',')) {
    std::string label = "eps_" + v;
    std::replace(label.begin(), label.end(), '/', '-');
    cells.push_back({label, ParseFraction(v), a.attack.terms});
  }
  if (cells.empty()) Usage("--values must list at least one epsilon");
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& x, const Cell& y) {
    return x.epsilon < y.epsilon;
  });
  RunGrid("sweep-eps", cells, a, c);
}

void CmdAblate(const GridArgs& a, const Common& c) {
  std::vector<Cell> cells;
  const double eps = ParseFraction(a.attack.epsilon);
  for (const auto& subset : Split(a.grid, ';')) {
    std::string label = "terms_" + subset;
    std::replace(label.begin(), label.end(), ',', '+');
    cells.push_back({label, eps, subset});
  }
  if (cells.empty()) Usage("--grid must list at least one term subset");
  RunGrid("ablate", cells, a, c);
}

struct RenderArgs {
  std::string in;
  std::string out;
};

void CmdRender(const RenderArgs& a, const Common& c) {
  Check(uapseg_render_label_file(a.in.c_str(), a.out.c_str(), c.classes,
                                 c.ignore),
        "render");
  std::cout << "rendered " << a.in << " -> " << a.out << "\n";
}

struct InspectArgs {
  std::string image;
  std::string out;
};

void CmdInspectFrequency(const InspectArgs& a) {
  Check(uapseg_inspect_frequency(a.image.c_str(), a.out.c_str()),
        "inspect-frequency");
  std::cout << "low-pass reconstruction -> " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal adversarial perturbations for segmentation models"};
  app.require_subcommand(1);
  Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
  app.add_option("--classes", common.classes, "number of classes")
      ->capture_default_str();
  app.add_option("--ignore", common.ignore, "ignore label")
      ->capture_default_str();

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen_cmd->add_option("--n", gen.n, "number of images")->capture_default_str();
  gen_cmd->add_option("--classes", common.classes, "number of classes");
  gen_cmd->add_option("--size", gen.size, "HxW")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  TrainModelArgs tm;
  auto* tm_cmd = app.add_subcommand("train-model", "train a toy segmenter");
  tm_cmd->add_option("--data", tm.data, "corpus directory")->required();
  tm_cmd->add_option("--classes", common.classes, "number of classes");
  tm_cmd->add_option("--arch", tm.arch, "toyA | toyB | linear")
      ->capture_default_str();
  tm_cmd->add_option("--epochs", tm.epochs)->capture_default_str();
  tm_cmd->add_option("--batch", tm.batch)->capture_default_str();
  tm_cmd->add_option("--lr", tm.lr)->capture_default_str();
  tm_cmd->add_option("--seed", tm.seed)->capture_default_str();
  tm_cmd->add_option("--out", tm.out, "checkpoint path")->required();

  TrainUapArgs tu;
  auto* tu_cmd = app.add_subcommand("train-uap", "train a universal perturbation");
  tu_cmd->add_option("--data", tu.data, "corpus directory")->required();
  tu_cmd->add_option("--model", tu.model, "checkpoint")->required();
  tu_cmd->add_option("--classes", common.classes, "number of classes");
  tu.attack.Register(tu_cmd, true, true);
  tu_cmd->add_option("--out", tu.out, "perturbation path")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "mIoU report, benign or perturbed");
  ev_cmd->add_option("--data", ev.data, "corpus directory")->required();
  ev_cmd->add_option("--model", ev.model, "checkpoint")->required();
  ev_cmd->add_option("--classes", common.classes, "number of classes");
  ev_cmd->add_option("--pert", ev.pert, "perturbation file");
  ev_cmd->add_option("--out", ev.out, "report path stem");

  TransferArgs tr;
  auto* tr_cmd = app.add_subcommand("transfer", "cross-model mIoU matrix");
  tr_cmd->add_option("--data", tr.data, "corpus directory")->required();
  tr_cmd->add_option("--classes", common.classes, "number of classes");
  tr_cmd->add_option("--models", tr.models, "comma-separated checkpoints")
      ->required();
  tr_cmd->add_option("--perts", tr.perts, "comma-separated perturbations")
      ->required();
  tr_cmd->add_option("--out", tr.out, "output path stem");

  GridArgs sweep;
  auto* sw_cmd = app.add_subcommand("sweep-eps", "attack strength sweep");
  sw_cmd->add_option("--data", sweep.data, "attack corpus")->required();
  sw_cmd->add_option("--eval-data", sweep.eval_data, "evaluation corpus");
  sw_cmd->add_option("--model", sweep.model, "checkpoint")->required();
  sw_cmd->add_option("--classes", common.classes, "number of classes");
  sw_cmd->add_option("--values", sweep.values, "comma-separated epsilons")
      ->capture_default_str();
  sw_cmd->add_option("--seeds", sweep.seeds, "comma-separated seeds")
      ->capture_default_str();
  sweep.attack.Register(sw_cmd, false, true);
  sw_cmd->add_option("--out", sweep.out, "output directory")->required();

  GridArgs abl;
  auto* ab_cmd = app.add_subcommand("ablate", "loss-term ablation");
  ab_cmd->add_option("--data", abl.data, "attack corpus")->required();
  ab_cmd->add_option("--eval-data", abl.eval_data, "evaluation corpus");
  ab_cmd->add_option("--model", abl.model, "checkpoint")->required();
  ab_cmd->add_option("--classes", common.classes, "number of classes");
  ab_cmd->add_option("--grid", abl.grid, "';'-separated term subsets")
      ->capture_default_str();
  ab_cmd->add_option("--seeds", abl.seeds, "comma-separated seeds")
      ->capture_default_str();
  abl.attack.Register(ab_cmd, true, false);
  ab_cmd->add_option("--out", abl.out, "output directory")->required();

  RenderArgs rd;
  auto* rd_cmd = app.add_subcommand("render", "color a label/prediction map");
  rd_cmd->add_option("--in", rd.in, "single-channel PGM")->required();
  rd_cmd->add_option("--out", rd.out, "output PPM")->required();
  rd_cmd->add_option("--classes", common.classes, "palette size");

  InspectArgs in;
  auto* in_cmd = app.add_subcommand("inspect-frequency",
                                    "write the low-pass reconstruction");
  in_cmd->add_option("--image", in.image, "PPM/PGM image")->required();
  in_cmd->add_option("--out", in.out, "output PPM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) CmdGenData(gen, common);
    if (*tm_cmd) CmdTrainModel(tm, common);
    if (*tu_cmd) CmdTrainUap(tu, common);
    if (*ev_cmd) CmdEval(ev, common);
    if (*tr_cmd) CmdTransfer(tr, common);
    if (*sw_cmd) CmdSweepEps(sweep, common);
    if (*ab_cmd) CmdAblate(abl, common);
    if (*rd_cmd) CmdRender(rd, common);
    if (*in_cmd) CmdInspectFrequency(in);
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == UAPSEG_ERR_USAGE ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
