#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bdplan/bench/bench.hpp"
#include "bdplan/core/hash.hpp"
#include "bdplan/learn/planners.hpp"
#include "bdplan/spec/instantiate.hpp"
#include "bdplan/world/io.hpp"

namespace fs = std::filesystem;
using namespace bdplan;
using nlohmann::json;

namespace {

struct Args {
  std::string command;  // e.g. "attack ds"
  std::string config;
  std::string dir = "run";
  std::string data;
  std::string benign;
  std::string model;
  std::string preprocessor;
  std::string tasks = "fresh";
  std::string out;
  int map_index = 0;
  bool wrong_spec = false;

  json to_json() const {
    return {{"command", command}, {"dir", dir},   {"data", data},
            {"benign", benign},   {"model", model}, {"preprocessor", preprocessor},
            {"tasks", tasks},     {"out", out},   {"map_index", map_index},
            {"wrong_spec", wrong_spec}};
  }
  static Args from_json(const json& j) {
    Args a;
    a.command = j.at("command").get<std::string>();
    a.dir = j.at("dir").get<std::string>();
    a.data = j.at("data").get<std::string>();
    a.benign = j.at("benign").get<std::string>();
    a.model = j.at("model").get<std::string>();
    a.preprocessor = j.at("preprocessor").get<std::string>();
    a.tasks = j.at("tasks").get<std::string>();
    a.out = j.at("out").get<std::string>();
    a.map_index = j.at("map_index").get<int>();
    a.wrong_spec = j.at("wrong_spec").get<bool>();
    return a;
  }
};

std::string hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Run {
 public:
  Run(Args a, bench::ExperimentConfig c) : args_(std::move(a)), cfg_(std::move(c)) {}

  void execute() {
    fs::create_directories(dir());
    const auto& c = args_.command;
    if (c == "synth-maps") synth_maps();
    else if (c == "gen-demos") gen_demos();
    else if (c == "train-benign") train_benign();
    else if (c == "attack ds" || c == "attack pis") attack(c == "attack ds" ? attack::Injection::DS : attack::Injection::PIS);
    else if (c == "eval") eval();
    else if (c == "defend finetune") finetune();
    else if (c == "defend invert") invert();
    else if (c == "defend reconstruct") reconstruct();
    else if (c == "render") render();
    else throw std::invalid_argument("unknown command '" + c + "'");
    write_manifest();
  }

 private:
  fs::path dir() const { return args_.dir; }
  fs::path path_or(const std::string& p, const char* fallback) const {
    return p.empty() ? dir() / fallback : fs::path(p);
  }
  fs::path data_path() const { return path_or(args_.data, "dataset.jsonl"); }
  fs::path benign_path() const { return path_or(args_.benign, "benign.ckpt"); }
  fs::path model_path() const {
    const char* fallback =
        cfg_.attack.mode == attack::Injection::DS ? "backdoored_ds.ckpt" : "backdoored_pis.ckpt";
    return path_or(args_.model, fallback);
  }
  fs::path out_path(const char* fallback) const { return path_or(args_.out, fallback); }

  void input(const fs::path& p) { inputs_[p.string()] = hex(fnv1a64(read_file(p))); }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }

  learn::Model load(const fs::path& p) {
    input(p);
    return learn::load_model(p);
  }
  learn::Dataset dataset() {
    input(data_path());
    return learn::load_jsonl(data_path());
  }

  void save(const learn::Model& m, const fs::path& p) {
    learn::save_model(m, p);
    output(p);
  }
  void save_json(const json& j, const fs::path& p) {
    bench::write_text(p, j.dump(2) + "\n");
    output(p);
  }

  void synth_maps() {
    const auto maps = bench::synth_maps(cfg_.maps);
    bench::save_maps(maps, dir() / "maps");
    output(dir() / "maps");
  }

  void gen_demos() {
    const auto maps = bench::load_maps(dir() / "maps", cfg_.maps.count);
    auto d = bench::generate_demos(maps, cfg_.demos);
    const auto p = out_path("dataset.jsonl");
    learn::save_jsonl(d, p);
    output(p);
  }

  void train_benign() {
    const auto r = bench::train_benign(cfg_, dataset());
    save(r.model, out_path("benign.ckpt"));
    save_json({{"loss_curve", r.loss_curve}, {"steps", r.steps}}, dir() / "train_benign.json");
  }

  void attack(attack::Injection mode) {
    cfg_.attack.mode = mode;
    const auto d = dataset();
    std::optional<learn::Model> benign;
    if (!cfg_.attack.from_scratch) benign = load(benign_path());
    const auto r = bench::train_attack(cfg_, d, benign ? &*benign : nullptr);
    save(r.model, out_path(mode == attack::Injection::DS ? "backdoored_ds.ckpt"
                                                          : "backdoored_pis.ckpt"));
    save_json({{"loss_curve", r.loss_curve}, {"steps", r.steps}},
              dir() / (std::string("attack_") + std::string(attack::to_string(mode)) + ".json"));
  }

  std::vector<planning::PlanTask> tasks() {
    if (args_.tasks == "fresh") return bench::eval_tasks(cfg_.maps, cfg_.eval);
    const auto d = dataset();
    return bench::split_tasks(d, learn::parse_split(args_.tasks));
  }

  bench::ReportRow row(const std::string& injection, const planning::MetricsReport& m) const {
    return {std::string(cfg_.planner == learn::Arch::Sampler ? "sampler" : "guidance"), injection,
            cfg_.attack.spec.label(), std::string(world::to_string(cfg_.attack.trigger.shape)), m};
  }

  void write_report(std::span<const bench::ReportRow> rows, const char* stem) {
    const auto csv = out_path((std::string(stem) + ".csv").c_str());
    bench::write_text(csv, bench::to_csv(rows));
    output(csv);
    auto js = csv;
    js.replace_extension(".json");
    save_json(bench::to_json(rows), js);
  }

  void eval() {
    const auto benign = load(benign_path());
    const bool has_model = !args_.model.empty();
    const auto model = has_model ? load(model_path()) : benign;
    std::optional<defense::Preprocessor> pre;
    if (!args_.preprocessor.empty()) pre.emplace(load(args_.preprocessor));
    const auto t = tasks();
    const auto acfg = cfg_.attack.config();
    const auto m = bench::evaluate(benign, model, t, &acfg, cfg_.eval, pre ? &*pre : nullptr);
    std::string injection = has_model ? std::string(attack::to_string(cfg_.attack.mode)) : "none";
    if (pre) injection += "+reconstruct";
    const std::vector<bench::ReportRow> rows{row(injection, m)};
    write_report(rows, "metrics");
  }

  void finetune() {
    const auto benign = load(benign_path());
    const auto model = load(model_path());
    const auto d = dataset();
    const auto r = defense::finetune(model, d, cfg_.defense.finetune.options());
    save(r.model, out_path("finetuned.ckpt"));
    const auto t = bench::eval_tasks(cfg_.maps, cfg_.eval);
    const auto acfg = cfg_.attack.config();
    const std::vector<bench::ReportRow> rows{
        row(std::string(attack::to_string(cfg_.attack.mode)),
            bench::evaluate(benign, model, t, &acfg, cfg_.eval)),
        row(std::string(attack::to_string(cfg_.attack.mode)) + "+finetune",
            bench::evaluate(benign, r.model, t, &acfg, cfg_.eval))};
    write_report(rows, "finetune");
  }

  void invert() {
    const auto model = load(model_path());
    const auto d = dataset();
    const auto suspected =
        args_.wrong_spec ? bench::shifted_spec(cfg_.attack.spec) : cfg_.attack.spec;
    const auto tt = bench::inversion_tasks(d, suspected.formula(), cfg_.defense.inversion_tasks);
    const auto truth = world::make_trigger(cfg_.attack.trigger, tt.front().map->width(),
                                           tt.front().map->height());
    auto opts = cfg_.defense.inversion;
    opts.horizon = cfg_.attack.spec.t2;
    const auto r = defense::invert_trigger(model, tt, opts, &truth);
    save_json({{"avg_l1", *r.avg_l1},
               {"footprint_area", r.footprint_area},
               {"objective", r.objective},
               {"raw_objective", r.raw_objective},
               {"objective_trace", r.objective_trace},
               {"raw_trace", r.raw_trace},
               {"delta", r.delta},
               {"mask", r.mask},
               {"footprint", r.footprint},
               {"suspected_center", {suspected.center.x, suspected.center.y}}},
              out_path("inversion.json"));
  }

  void reconstruct() {
    const auto d = dataset();
    const auto maps = bench::split_maps(d, learn::Split::Train);
    auto ro = cfg_.defense.reconstruct;
    const auto pre = defense::reconstruct_input_defense(maps, cfg_.attack.trigger, ro);
    save(pre.model(), out_path("preprocessor.ckpt"));
    const auto held = bench::split_maps(d, learn::Split::Test);
    json report{{"train_maps", maps.size()}};
    if (!held.empty()) report["heldout_l1"] = defense::reconstruction_l1(pre, held);
    save_json(report, dir() / "reconstruct.json");
  }

  void render() {
    const auto benign = load(benign_path());
    const auto model = args_.model.empty() ? benign : load(model_path());
    const auto t = bench::eval_tasks(cfg_.maps, cfg_.eval);
    if (args_.map_index < 0 || static_cast<size_t>(args_.map_index) >= t.size())
      throw std::out_of_range("map index outside the evaluation tasks");
    const auto& task = t[static_cast<size_t>(args_.map_index)];
    const auto acfg = cfg_.attack.config();
    learn::Record rec;
    rec.map = task.map;
    rec.start = task.start;
    rec.goal = task.goal;
    const auto tt = attack::make_triggered(acfg, rec);
    auto triggered = task;
    triggered.map = tt.map;
    const auto seed = static_cast<uint64_t>(args_.map_index);
    const double w = cfg_.eval.guidance_w;
    const std::vector<bench::RenderPath> clean{
        {bench::plan(benign, task, seed, w).trajectory, "#1f77b4", "benign"},
        {bench::plan(model, task, seed, w).trajectory, "#d62728", "backdoored"}};
    const std::vector<bench::RenderPath> trig{
        {bench::plan(benign, triggered, seed, w).trajectory, "#1f77b4", "benign"},
        {bench::plan(model, triggered, seed, w).trajectory, "#d62728", "backdoored"}};
    const auto pattern = attack::trigger_for(acfg, *task.map, 0);
    const auto clean_formula = spec::instantiate(acfg.formula, *task.map);
    const auto a = dir() / "render_clean.svg", b = dir() / "render_triggered.svg";
    bench::write_text(a, bench::render_svg(*task.map, clean, nullptr, &clean_formula));
    bench::write_text(b, bench::render_svg(*tt.map, trig, &pattern, &tt.formula));
    output(a);
    output(b);
  }

  void write_manifest() {
    std::string name = args_.command;
    std::replace(name.begin(), name.end(), ' ', '_');
    if (!args_.out.empty()) name += "_" + fs::path(args_.out).stem().string();
    auto m = bench::manifest(cfg_, args_.command, inputs_);
    m["args"] = args_.to_json();
    m["outputs"] = outputs_;
    bench::write_text(dir() / ("manifest_" + name + ".json"), m.dump(2) + "\n");
  }

  Args args_;
  bench::ExperimentConfig cfg_;
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
};

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor specification workbench for neural path planners"};
  app.require_subcommand(1);
  Args args;
  std::string manifest_path;

  auto common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", args.config, "experiment config (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--dir", args.dir, "working directory for artifacts");
    sub->add_option("--out", args.out, "output path override");
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--data", args.data, "dataset JSONL");
    sub->add_option("--benign", args.benign, "benign checkpoint");
    sub->add_option("--model", args.model, "model checkpoint under test");
  };

  auto* synth = app.add_subcommand("synth-maps", "generate the synthetic map corpus");
  common(synth);
  auto* demos = app.add_subcommand("gen-demos", "PRM demonstrations for the corpus");
  common(demos);
  auto* train = app.add_subcommand("train-benign", "train the benign planner");
  common(train);
  model_opts(train);

  auto* atk = app.add_subcommand("attack", "inject a backdoor");
  atk->require_subcommand(1);
  for (const char* mode : {"ds", "pis"}) {
    auto* s = atk->add_subcommand(mode, std::string(mode) == "ds" ? "training-control injection"
                                                                  : "solve-and-poison injection");
    common(s);
    model_opts(s);
  }

  auto* ev = app.add_subcommand("eval", "metrics CSV/JSON for a model");
  common(ev);
  model_opts(ev);
  ev->add_option("--tasks", args.tasks, "fresh, train or test")
      ->check(CLI::IsMember({"fresh", "train", "test"}));
  ev->add_option("--preprocessor", args.preprocessor, "autoencoder checkpoint");

  auto* def = app.add_subcommand("defend", "run a defense");
  def->require_subcommand(1);
  for (const char* mode : {"finetune", "invert", "reconstruct"}) {
    auto* s = def->add_subcommand(mode, std::string("defense: ") + mode);
    common(s);
    model_opts(s);
    if (std::string(mode) == "invert")
      s->add_flag("--wrong-spec", args.wrong_spec, "invert with a displaced target region");
  }

  auto* render = app.add_subcommand("render", "SVG of a scene with and without the trigger");
  common(render);
  model_opts(render);
  render->add_option("--map-index", args.map_index, "evaluation task index");

  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
  rerun->add_option("manifest", manifest_path, "manifest JSON")->required()->check(CLI::ExistingFile);
  rerun->add_option("--dir", args.dir, "working directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (rerun->parsed()) {
      const auto m = json::parse(read_file(manifest_path));
      const std::string dir_override = rerun->count("--dir") ? args.dir : "";
      Args a = Args::from_json(m.at("args"));
      if (!dir_override.empty()) a.dir = dir_override;
      Run(std::move(a), bench::ExperimentConfig::from_json(m.at("config"))).execute();
      return 0;
    }
    for (auto* sub : app.get_subcommands()) {
      args.command = sub->get_name();
      for (auto* leaf : sub->get_subcommands()) args.command += " " + leaf->get_name();
    }
    Run(args, bench::load_config(args.config)).execute();
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what(), 1);
  }
}
