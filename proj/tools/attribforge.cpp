// attribforge command-line tool.
//
//   generate   build train/test benchmark files from a knowledge graph and
//              a KGQA record file
//   stats      print category/complexity/split margins of dataset files
//   score      score evaluator predictions against a benchmark file
//   prompts    emit evaluator prompts for every sample of a dataset
//
// Exit codes: 0 success, 1 input or configuration error, 2 valid but empty
// result.

#include "attribforge/eval.hpp"
#include "attribforge/pipeline.hpp"
#include "attribforge/textgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace attribforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

// Flag > environment > config file, for the text-generation settings.
ServiceConfig resolve_service(const nlohmann::json& config_file, const std::string& flag_url,
                              const std::string& flag_key, const std::string& flag_model) {
    ServiceConfig service;
    if (config_file.contains("textgen")) {
        const auto& t = config_file.at("textgen");
        service.url = t.value("url", service.url);
        service.key = t.value("key", service.key);
        service.model = t.value("model", service.model);
    }
    if (auto env = ServiceConfig::from_env()) {
        if (!env->url.empty()) service.url = env->url;
        if (!env->key.empty()) service.key = env->key;
        if (!env->model.empty()) service.model = env->model;
    }
    if (!flag_url.empty()) service.url = flag_url;
    if (!flag_key.empty()) service.key = flag_key;
    if (!flag_model.empty()) service.model = flag_model;
    return service;
}

nlohmann::json stats_to_json(const StatsTable& t) {
    nlohmann::json j;
    for (std::size_t i = 0; i < 4; ++i)
        j["by_category"][to_string(static_cast<Category>(i))] = t.by_category[i];
    for (std::size_t i = 0; i < 4; ++i)
        j["by_complexity"][to_string(static_cast<ComplexityType>(i))] = t.by_complexity[i];
    j["total"] = t.total;
    return j;
}

void print_stats_row(const std::string& label, const StatsTable& t) {
    std::printf("%-12s", label.c_str());
    for (std::size_t i = 0; i < 4; ++i) std::printf(" %7zu", t.by_category[i]);
    std::printf(" |");
    for (std::size_t i = 0; i < 4; ++i) std::printf(" %7zu", t.by_complexity[i]);
    std::printf(" | %7zu\n", t.total);
}

void print_stats_header() {
    std::printf("%-12s %7s %7s %7s %7s | %7s %7s %7s %7s | %7s\n", "split", "sup", "ins", "con",
                "irr", "single", "union", "inter", "concat", "total");
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& kg_triples_path, const std::string& kg_meta_path,
                 const std::string& kgqa_path, const std::string& out_dir, std::uint64_t seed,
                 double split_ratio, std::size_t union_cap, const FilterConfig& filters,
                 const std::string& mode, const ServiceConfig& service,
                 const std::string& phrases_path, const std::string& prompts_dir, unsigned jobs,
                 const nlohmann::json& resolved_config) {
    std::vector<std::string> warnings;
    auto triples_in = open_input(kg_triples_path);
    auto meta_in = open_input(kg_meta_path);
    KnowledgeGraph kg = KnowledgeGraph::load(triples_in, meta_in, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

    RelationPhrases phrases;
    if (!phrases_path.empty()) {
        auto in = open_input(phrases_path);
        phrases = RelationPhrases::load(in);
    }
    PromptCatalog catalog =
        prompts_dir.empty() ? PromptCatalog::builtin() : PromptCatalog::load_dir(prompts_dir);

    IngestReport ingest_report;
    std::vector<KgqaSample> records;
    {
        auto kgqa_in = open_input(kgqa_path);
        try {
            records = ingest_kgqa(kgqa_in, kg, filters, ingest_report);
        } catch (const NoSamples& e) {
            for (const std::string& d : ingest_report.diagnostics) std::cerr << d << "\n";
            std::cerr << "error: " << e.what() << "\n";
            return kExitEmpty;
        }
    }
    for (const std::string& d : ingest_report.diagnostics) std::cerr << "note: " << d << "\n";

    Verbalizer verbalizer(kg, phrases, catalog);
    std::optional<HttpTextGenClient> client;
    std::ofstream service_log;
    if (mode == "service") {
        if (service.url.empty()) {
            std::cerr << "error: service mode needs an endpoint URL "
                         "(--textgen-url or ATTRIBFORGE_TEXTGEN_URL)\n";
            return kExitError;
        }
        client.emplace(service);
        service_log = open_output((fs::path(out_dir) / "service_log.jsonl").string());
        client->set_log(&service_log);
        verbalizer.use_service(*client);
    }

    GenerationConfig config;
    config.seed = seed;
    config.union_cap = union_cap;
    config.filters = filters;

    fs::create_directories(out_dir);
    GenerationResult result = run_generation(records, kg, config, verbalizer, jobs);
    if (result.samples.empty()) {
        std::cerr << "error: no samples were generated\n";
        return kExitEmpty;
    }

    Rng split_rng(derive_seed(seed, "split"));
    auto [train, test] = split_dataset(result.samples, split_ratio, split_rng);

    {
        auto out = open_output((fs::path(out_dir) / "train.jsonl").string());
        write_dataset(out, train);
    }
    {
        auto out = open_output((fs::path(out_dir) / "test.jsonl").string());
        write_dataset(out, test);
    }
    {
        nlohmann::json stats;
        stats["train"] = stats_to_json(compute_stats(train));
        stats["test"] = stats_to_json(compute_stats(test));
        stats["all"] = stats_to_json(compute_stats(result.samples));
        auto out = open_output((fs::path(out_dir) / "stats.json").string());
        out << stats.dump(2) << "\n";
    }
    {
        nlohmann::json report;
        report["config"] = resolved_config;
        report["seed"] = seed;
        report["ingest"] = {{"records", ingest_report.records},
                            {"malformed", ingest_report.malformed},
                            {"shape_dropped", ingest_report.shape_dropped},
                            {"hops_dropped", ingest_report.hops_dropped},
                            {"subjects_dropped", ingest_report.subjects_dropped},
                            {"inconsistent_dropped", ingest_report.inconsistent_dropped},
                            {"kept", ingest_report.kept}};
        const GenCounters& c = result.counters;
        report["generation"] = {{"groups_total", c.groups_total},
                                {"groups_emitted", c.groups_emitted},
                                {"samples_emitted", c.samples_emitted},
                                {"grounding_failures", c.grounding_failures},
                                {"fallback_degenerate_union", c.fallback_degenerate_union},
                                {"fallback_infeasible_subject", c.fallback_infeasible_subject},
                                {"fallback_infeasible_answer", c.fallback_infeasible_answer},
                                {"missing_insufficient", c.missing_insufficient},
                                {"missing_contradictory", c.missing_contradictory},
                                {"missing_irrelevant", c.missing_irrelevant}};
        report["splits"] = {{"train", train.size()}, {"test", test.size()}};
        auto out = open_output((fs::path(out_dir) / "report.json").string());
        out << report.dump(2) << "\n";
    }

    std::printf("generated %zu samples (%zu train, %zu test) from %zu records\n",
                result.samples.size(), train.size(), test.size(), records.size());
    return kExitOk;
}

int cmd_stats(const std::vector<std::string>& paths) {
    print_stats_header();
    StatsTable all;
    for (const std::string& path : paths) {
        auto in = open_input(path);
        std::vector<AttributionSample> samples = read_dataset(in);
        StatsTable t = compute_stats(samples);
        print_stats_row(fs::path(path).stem().string(), t);
        for (std::size_t i = 0; i < 4; ++i) {
            all.by_category[i] += t.by_category[i];
            all.by_complexity[i] += t.by_complexity[i];
        }
        all.total += t.total;
    }
    if (paths.size() > 1) print_stats_row("all", all);
    return kExitOk;
}

struct PredFile {
    std::string path;
    std::map<std::string, std::string> outputs;  // id -> raw model output
};

PredFile read_predictions(const std::string& path) {
    PredFile p;
    p.path = path;
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw FileParseError(line_no, "expected `id<TAB>raw_model_output`");
        p.outputs[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return p;
}

nlohmann::json metrics_to_json(const EvalMetrics& m) {
    nlohmann::json j;
    j["micro_f1"] = m.micro_f1;
    j["kappa"] = m.kappa ? nlohmann::json(*m.kappa) : nlohmann::json(nullptr);
    j["pearson"] = m.pearson ? nlohmann::json(*m.pearson) : nlohmann::json(nullptr);
    for (std::size_t c = 0; c < 4; ++c) {
        nlohmann::json block;
        block["precision"] = m.per_class[c].precision;
        block["recall"] = m.per_class[c].recall;
        block["f1"] = m.per_class[c].f1;
        j["per_category"][to_string(static_cast<Category>(c))] = std::move(block);
    }
    return j;
}

// Kappa over the joined pairs; unparseable predictions count as a fifth label.
double gold_pred_kappa(const std::vector<Category>& gold,
                       const std::vector<std::optional<Category>>& pred) {
    std::vector<int> a, b;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        a.push_back(static_cast<int>(gold[i]));
        b.push_back(pred[i] ? static_cast<int>(*pred[i]) : 4);
    }
    return cohens_kappa(a, b);
}

int cmd_score(const std::string& gold_path, const std::vector<std::string>& pred_paths,
              LabelScheme scheme, const std::string& group_by, const std::string& human_gold_path,
              const std::string& out_path) {
    std::vector<AttributionSample> gold_samples;
    {
        auto in = open_input(gold_path);
        gold_samples = read_dataset(in);
    }
    std::map<std::string, const AttributionSample*> by_id;
    for (const AttributionSample& s : gold_samples) by_id[s.id] = &s;

    std::map<std::string, Category> human;
    if (!human_gold_path.empty()) {
        auto in = open_input(human_gold_path);
        for (const AttributionSample& s : read_dataset(in)) human.emplace(s.id, s.category);
    }

    nlohmann::json output;
    std::vector<double> auto_micro, human_micro;
    for (const std::string& pred_path : pred_paths) {
        PredFile preds = read_predictions(pred_path);
        std::vector<Category> gold;
        std::vector<std::optional<Category>> pred;
        std::vector<ComplexityType> complexity;
        std::vector<Category> human_gold;
        std::vector<std::optional<Category>> human_pred;
        for (const auto& [id, raw] : preds.outputs) {
            auto it = by_id.find(id);
            if (it == by_id.end()) continue;
            gold.push_back(it->second->category);
            pred.push_back(extract_label(raw, scheme));
            complexity.push_back(it->second->complexity);
            auto h = human.find(id);
            if (h != human.end()) {
                human_gold.push_back(h->second);
                human_pred.push_back(pred.back());
            }
        }
        if (gold.empty()) {
            std::cerr << "error: no prediction ids in " << pred_path
                      << " match the gold dataset\n";
            return kExitEmpty;
        }

        EvalMetrics metrics = score(gold, pred);
        metrics.kappa = gold_pred_kappa(gold, pred);
        nlohmann::json entry;
        entry["overall"] = metrics_to_json(metrics);
        entry["pairs"] = gold.size();

        if (group_by == "complexity") {
            for (std::size_t c = 0; c < 4; ++c) {
                std::vector<Category> g;
                std::vector<std::optional<Category>> p;
                for (std::size_t i = 0; i < gold.size(); ++i)
                    if (complexity[i] == static_cast<ComplexityType>(c)) {
                        g.push_back(gold[i]);
                        p.push_back(pred[i]);
                    }
                const char* label = to_string(static_cast<ComplexityType>(c));
                if (g.empty()) {
                    entry["per_complexity"][label] = nullptr;
                    continue;
                }
                EvalMetrics sub = score(g, p);
                sub.kappa = gold_pred_kappa(g, p);
                entry["per_complexity"][label] = metrics_to_json(sub);
            }
        }

        if (!human_gold.empty()) {
            EvalMetrics hm = score(human_gold, human_pred);
            entry["overall_vs_human"] = metrics_to_json(hm);
            human_micro.push_back(hm.micro_f1);
            auto_micro.push_back(metrics.micro_f1);
        }
        output[pred_paths.size() == 1 ? "metrics" : fs::path(pred_path).filename().string()] =
            std::move(entry);
    }

    if (auto_micro.size() >= 2) {
        try {
            output["pearson_auto_vs_human"] = pearson(auto_micro, human_micro);
        } catch (const DegenerateVariance&) {
            output["pearson_auto_vs_human"] = nullptr;
        }
    }
    if (!human.empty()) {
        std::vector<Category> a, b;
        for (const AttributionSample& s : gold_samples) {
            auto h = human.find(s.id);
            if (h == human.end()) continue;
            a.push_back(s.category);
            b.push_back(h->second);
        }
        if (!a.empty()) output["kappa_auto_vs_human"] = cohens_kappa(a, b);
    }

    std::string text = output.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        auto out = open_output(out_path);
        out << text;
    }
    return kExitOk;
}

int cmd_prompts(const std::string& dataset_path, PromptStyle style, const std::string& out_path) {
    std::vector<AttributionSample> samples;
    {
        auto in = open_input(dataset_path);
        samples = read_dataset(in);
    }
    auto out = open_output(out_path);
    for (const AttributionSample& s : samples) {
        std::vector<std::pair<int, std::string>> citations;
        for (const Citation& c : s.citations) citations.emplace_back(c.index, c.text);
        nlohmann::ordered_json record;
        record["id"] = s.id;
        record["prompt"] = build_prompt(s.question, s.answer_statement, citations, style);
        out << record.dump() << "\n";
    }
    std::printf("wrote %zu prompts to %s\n", samples.size(), out_path.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attribforge: attributed-QA benchmark generation and evaluator scoring"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "Generate a benchmark from a KG and KGQA records");
    std::string kg_triples, kg_meta, kgqa, out_dir, config_path;
    std::string mode = "template";
    std::string phrases_path, prompts_dir;
    std::string textgen_url, textgen_key, textgen_model;
    std::uint64_t seed = 0;
    double split_ratio = 0.85;
    std::size_t union_cap = 3;
    unsigned jobs = 1;
    FilterConfig filters;
    bool no_answer_check = false;
    generate->add_option("--kg-triples", kg_triples, "Triple file (subject<TAB>relation<TAB>object)");
    generate->add_option("--kg-meta", kg_meta, "Entity meta file (id<TAB>name<TAB>types<TAB>cvt)");
    generate->add_option("--kgqa", kgqa, "KGQA records, one JSON object per line");
    generate->add_option("--out", out_dir, "Output directory")->required();
    auto* seed_opt = generate->add_option("--seed", seed, "Generation seed (required)");
    generate->add_option("--split-ratio", split_ratio, "Train fraction of provenance groups");
    generate->add_option("--union-cap", union_cap, "Maximum disjuncts added by union extension");
    generate->add_option("--mode", mode, "Verbalizer mode")
        ->check(CLI::IsMember({"template", "service"}));
    auto* jobs_opt = generate->add_option("--jobs", jobs, "Worker threads");
    generate->add_option("--max-hops", filters.max_path_hops, "Effective hop limit for path queries");
    generate->add_option("--max-tree-subjects", filters.max_tree_subjects,
                         "Subject-entity limit for tree queries");
    generate->add_flag("--no-answer-check", no_answer_check,
                       "Skip the answer-consistency check at ingest");
    generate->add_option("--phrases", phrases_path, "Relation phrase table (relation<TAB>phrase)");
    generate->add_option("--prompts-dir", prompts_dir, "Directory overriding the generation prompts");
    generate->add_option("--textgen-url", textgen_url, "Chat-completion endpoint URL");
    generate->add_option("--textgen-key", textgen_key, "Endpoint credential");
    generate->add_option("--textgen-model", textgen_model, "Model name");
    generate->add_option("--config", config_path, "JSON config file with defaults for these flags");

    // stats
    auto* stats = app.add_subcommand("stats", "Print dataset statistics");
    std::vector<std::string> stats_paths;
    stats->add_option("files", stats_paths, "Dataset files")->required()->expected(-1);

    // score
    auto* score_cmd = app.add_subcommand("score", "Score evaluator predictions");
    std::string gold_path, human_gold_path, score_out, group_by;
    std::vector<std::string> pred_paths;
    std::string scheme_name = "four-way";
    score_cmd->add_option("--gold", gold_path, "Benchmark dataset with gold categories")->required();
    score_cmd->add_option("--pred", pred_paths, "Prediction file(s): id<TAB>raw_model_output")
        ->required()
        ->expected(-1);
    score_cmd->add_option("--scheme", scheme_name, "Label scheme of the model output")
        ->check(CLI::IsMember({"four-way", "binary", "ternary"}));
    score_cmd->add_option("--group-by", group_by, "Additional metric blocks")
        ->check(CLI::IsMember({"category", "complexity"}));
    score_cmd->add_option("--human-gold", human_gold_path,
                          "Second dataset with human categories for agreement statistics");
    score_cmd->add_option("--out", score_out, "Write the metrics report here instead of stdout");

    // prompts
    auto* prompts = app.add_subcommand("prompts", "Emit evaluator prompts for a dataset");
    std::string prompts_dataset, prompts_out;
    std::string style_name = "four-way";
    prompts->add_option("--dataset", prompts_dataset, "Benchmark dataset")->required();
    prompts->add_option("--style", style_name, "Prompt style")
        ->check(CLI::IsMember({"four-way", "premise-hypothesis", "binary-nli", "default-four-way"}));
    prompts->add_option("--out", prompts_out, "Output prompt file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (generate->parsed()) {
            nlohmann::json config_file = nlohmann::json::object();
            if (!config_path.empty()) {
                auto in = open_input(config_path);
                config_file = nlohmann::json::parse(in);
                // flags win over config-file values
                if (kg_triples.empty()) kg_triples = config_file.value("kg_triples", "");
                if (kg_meta.empty()) kg_meta = config_file.value("kg_meta", "");
                if (kgqa.empty()) kgqa = config_file.value("kgqa", "");
                if (seed_opt->count() == 0 && config_file.contains("seed")) {
                    seed = config_file.at("seed").get<std::uint64_t>();
                    seed_opt->add_result(std::to_string(seed));
                }
            }
            if (seed_opt->count() == 0) {
                std::cerr << "error: --seed is required; generation never draws implicit entropy\n";
                return kExitError;
            }
            if (kg_triples.empty() || kg_meta.empty() || kgqa.empty()) {
                std::cerr << "error: --kg-triples, --kg-meta and --kgqa are required\n";
                return kExitError;
            }
            if (split_ratio <= 0.0 || split_ratio >= 1.0) {
                std::cerr << "error: --split-ratio must lie in (0, 1)\n";
                return kExitError;
            }
            filters.check_answer = !no_answer_check;
            // service mode keeps up to four requests in flight unless told otherwise
            if (mode == "service" && jobs_opt->count() == 0) jobs = 4;
            ServiceConfig service =
                resolve_service(config_file, textgen_url, textgen_key, textgen_model);
            nlohmann::json resolved = {
                {"kg_triples", kg_triples},
                {"kg_meta", kg_meta},
                {"kgqa", kgqa},
                {"out", out_dir},
                {"seed", seed},
                {"split_ratio", split_ratio},
                {"union_cap", union_cap},
                {"mode", mode},
                {"jobs", jobs},
                {"max_hops", filters.max_path_hops},
                {"max_tree_subjects", filters.max_tree_subjects},
                {"answer_check", filters.check_answer},
                {"phrases", phrases_path},
                {"prompts_dir", prompts_dir},
                {"textgen_url", service.url},
                {"textgen_model", service.model},
            };
            return cmd_generate(kg_triples, kg_meta, kgqa, out_dir, seed, split_ratio, union_cap,
                                filters, mode, service, phrases_path, prompts_dir, jobs, resolved);
        }
        if (stats->parsed()) return cmd_stats(stats_paths);
        if (score_cmd->parsed()) {
            auto scheme = label_scheme_from_string(scheme_name);
            if (!scheme) {
                std::cerr << "error: unknown scheme '" << scheme_name
                          << "' (valid: four-way, binary, ternary)\n";
                return kExitError;
            }
            return cmd_score(gold_path, pred_paths, *scheme, group_by, human_gold_path, score_out);
        }
        if (prompts->parsed()) {
            auto style = prompt_style_from_string(style_name);
            if (!style) {
                std::cerr << "error: unknown style '" << style_name
                          << "' (valid: four-way, premise-hypothesis, binary-nli, "
                             "default-four-way)\n";
                return kExitError;
            }
            return cmd_prompts(prompts_dataset, *style, prompts_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
