#include "taa/language.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

namespace taa {

namespace {

std::string name(BlockId b) { return std::string(block_name(b)); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

}  // namespace

// ---------------------------------------------------------------- inventory

Inventory::Inventory(int n_blocks, std::vector<Sentence> sentences)
    : n_blocks_(n_blocks), sentences_(std::move(sentences)) {
    for (std::size_t i = 0; i < sentences_.size(); ++i) {
        if (!by_text_.emplace(sentences_[i].text, i).second) {
            throw Error(ErrorKind::inventory_load, "duplicate sentence '" + sentences_[i].text + "'");
        }
    }
}

const Sentence* Inventory::find(std::string_view text) const {
    auto it = by_text_.find(text);
    return it == by_text_.end() ? nullptr : &sentences_[it->second];
}

const Sentence& Inventory::get(std::string_view text) const {
    if (const auto* s = find(text)) return *s;
    std::string msg = "unknown sentence '" + std::string(text) + "'; nearest:";
    for (const auto& n : nearest(text)) msg += " '" + n + "'";
    throw Error(ErrorKind::unknown_sentence, msg);
}

std::vector<const Sentence*> Inventory::for_transformation(const Transformation& t) const {
    std::vector<const Sentence*> out;
    for (const auto& s : sentences_) {
        if (s.transformation == t) out.push_back(&s);
    }
    return out;
}

std::vector<std::string> Inventory::nearest(std::string_view text, std::size_t k) const {
    std::vector<std::pair<std::size_t, const std::string*>> scored;
    for (const auto& s : sentences_) scored.emplace_back(edit_distance(text, s.text), &s.text);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(*scored[i].second);
    return out;
}

std::vector<Sentence> generate_sentences(int n) {
    require_supported_size(n);
    std::vector<Sentence> out;
    const char* verbs[] = {"put", "get", "bring"};
    for (BlockId a = 0; a < n; ++a) {
        for (BlockId b = a + 1; b < n; ++b) {
            const auto p = PredicateId::close(a, b);
            for (const auto& [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
                for (const char* v : verbs) out.push_back({std::string(v) + " " + name(x) + " close to " + name(y), {p, true}});
                for (const char* v : verbs) out.push_back({std::string(v) + " " + name(x) + " far from " + name(y), {p, false}});
            }
        }
    }
    for (BlockId a = 0; a < n; ++a) {
        for (BlockId b = 0; b < n; ++b) {
            if (a == b) continue;
            const auto p = PredicateId::above(a, b);
            const auto top = name(a), bottom = name(b);
            for (const char* v : verbs) out.push_back({std::string(v) + " " + top + " above " + bottom, {p, true}});
            out.push_back({"put " + top + " on top of " + bottom, {p, true}});
            out.push_back({"put " + bottom + " below " + top, {p, true}});
            out.push_back({"get " + bottom + " below " + top, {p, true}});

            out.push_back({"remove " + top + " from " + bottom, {p, false}});
            out.push_back({"take " + top + " off " + bottom, {p, false}});
            out.push_back({"get " + top + " off " + bottom, {p, false}});
            out.push_back({"lift " + top + " off " + bottom, {p, false}});
            out.push_back({"get " + bottom + " from under " + top, {p, false}});
        }
    }
    return out;
}

std::filesystem::path default_data_dir() {
#ifdef TAA_DATA_DIR
    return TAA_DATA_DIR;
#else
    return "data";
#endif
}

Inventory load_inventory(int n_blocks, const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::inventory_load, "cannot open sentence table " + file.string());
    std::vector<Sentence> sentences;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& e : j) {
            const auto p = PredicateId::parse(e.at("predicate").get<std::string>());
            p.index(n_blocks);  // range check
            const int target = e.at("target").get<int>();
            if (target != 0 && target != 1) throw Error(ErrorKind::inventory_load, "target must be 0 or 1");
            sentences.push_back({e.at("text").get<std::string>(), {p, target == 1}});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::inventory_load, "malformed sentence table " + file.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::inventory_load) throw;
        throw Error(ErrorKind::inventory_load, "malformed sentence table " + file.string() + ": " + e.what());
    }
    return Inventory(n_blocks, std::move(sentences));
}

Inventory build_inventory(int n_blocks, const std::filesystem::path& data_dir) {
    if (n_blocks == 3) return load_inventory(3, data_dir / "sentences_n3.json");
    return Inventory(n_blocks, generate_sentences(n_blocks));
}

nlohmann::json to_json(const std::vector<Sentence>& sentences) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : sentences) {
        out.push_back({{"text", s.text},
                       {"predicate", s.transformation.predicate.name()},
                       {"target", s.transformation.target ? 1 : 0}});
    }
    return out;
}

// ---------------------------------------------------------------- grounding

ConfigSet oracle_ground(const Transformation& t, const Configuration& current, const ConfigSet& universe,
                        bool exclude_satisfied_current) {
    const int idx = t.predicate.index(current.n_blocks());
    ConfigSet out;
    for (const auto& c : universe) {
        if (c.get(idx) == t.target) out.insert(c);
    }
    if (exclude_satisfied_current && current.get(idx) == t.target) out.erase(current);
    return out;
}

void GroundingTable::induce(const Configuration& before, std::string_view text, const Configuration& after) {
    if (before == after) throw Error(ErrorKind::invalid_config, "induction needs an observed change");
    std::set<Transformation> diff;
    for (int i = 0; i < after.size(); ++i) {
        if (after.get(i) != before.get(i)) diff.insert({PredicateId::from_index(n_blocks_, i), after.get(i)});
    }
    auto it = candidates_.find(text);
    std::set<Transformation> next;
    if (it == candidates_.end()) {
        next = std::move(diff);
    } else {
        std::set_intersection(it->second.begin(), it->second.end(), diff.begin(), diff.end(),
                              std::inserter(next, next.begin()));
    }
    if (next.empty()) {
        throw Error(ErrorKind::inconsistent_data, "example contradicts earlier observations of '" + std::string(text) + "'");
    }
    if (it == candidates_.end()) {
        candidates_.emplace(std::string(text), std::move(next));
    } else {
        it->second = std::move(next);
    }
}

bool GroundingTable::converged(std::string_view text) const {
    auto it = candidates_.find(text);
    return it != candidates_.end() && it->second.size() == 1;
}

std::optional<Transformation> GroundingTable::lookup(std::string_view text) const {
    if (!converged(text)) return std::nullopt;
    return *candidates_.find(text)->second.begin();
}

std::set<Transformation> GroundingTable::candidates(std::string_view text) const {
    if (auto it = candidates_.find(text); it != candidates_.end()) return it->second;
    std::set<Transformation> all;
    for (int i = 0; i < predicate_count(n_blocks_); ++i) {
        all.insert({PredicateId::from_index(n_blocks_, i), false});
        all.insert({PredicateId::from_index(n_blocks_, i), true});
    }
    return all;
}

std::size_t GroundingTable::converged_count() const {
    return static_cast<std::size_t>(
        std::count_if(candidates_.begin(), candidates_.end(), [](const auto& kv) { return kv.second.size() == 1; }));
}

nlohmann::json GroundingTable::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [text, cands] : candidates_) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& t : cands) list.push_back({{"predicate", t.predicate.name()}, {"target", t.target ? 1 : 0}});
        out[text] = {{"converged", cands.size() == 1}, {"candidates", list}};
    }
    return out;
}

// -------------------------------------------------------------- expressions

int Expression::depth() const {
    int d = 0;
    for (const auto& c : children) d = std::max(d, c.depth() + 1);
    return d;
}

std::string Expression::to_string() const {
    switch (op) {
        case Op::leaf: return "\"" + text + "\"";
        case Op::and_: return "(" + children[0].to_string() + " and " + children[1].to_string() + ")";
        case Op::or_: return "(" + children[0].to_string() + " or " + children[1].to_string() + ")";
        case Op::not_: return "not " + children[0].to_string();
    }
    return {};
}

nlohmann::json to_json(const Expression& e) {
    switch (e.op) {
        case Expression::Op::leaf: return {{"op", "leaf"}, {"text", e.text}};
        case Expression::Op::not_: return {{"op", "not"}, {"children", {to_json(e.children[0])}}};
        case Expression::Op::and_:
        case Expression::Op::or_:
            return {{"op", e.op == Expression::Op::and_ ? "and" : "or"},
                    {"children", {to_json(e.children[0]), to_json(e.children[1])}}};
    }
    return {};
}

Expression expression_from_json(const nlohmann::json& j) {
    try {
        if (j.is_string()) return Expression::leaf(j.get<std::string>());
        const auto op = j.at("op").get<std::string>();
        if (op == "leaf") return Expression::leaf(j.at("text").get<std::string>());
        const auto& kids = j.at("children");
        if (op == "not") {
            if (kids.size() != 1) throw Error(ErrorKind::parse, "'not' takes exactly one child");
            return Expression::negate(expression_from_json(kids[0]));
        }
        if (op == "and" || op == "or") {
            if (kids.size() != 2) throw Error(ErrorKind::parse, "'" + op + "' takes exactly two children");
            auto a = expression_from_json(kids[0]);
            auto b = expression_from_json(kids[1]);
            return op == "and" ? Expression::all(std::move(a), std::move(b)) : Expression::any(std::move(a), std::move(b));
        }
        throw Error(ErrorKind::parse, "unknown expression op '" + op + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed expression: ") + e.what());
    }
}

Expression sample_expression(const Inventory& inventory, Rng& rng, int max_depth) {
    const std::size_t kind = max_depth <= 0 ? 0 : rng.index(4);
    switch (kind) {
        case 1: {
            auto a = sample_expression(inventory, rng, max_depth - 1);
            return Expression::all(std::move(a), sample_expression(inventory, rng, max_depth - 1));
        }
        case 2: {
            auto a = sample_expression(inventory, rng, max_depth - 1);
            return Expression::any(std::move(a), sample_expression(inventory, rng, max_depth - 1));
        }
        case 3: return Expression::negate(sample_expression(inventory, rng, max_depth - 1));
        default: return Expression::leaf(inventory.at(rng.index(inventory.size())).text);
    }
}

Transformation LeafGrounding::resolve(std::string_view text) const {
    const Sentence& s = inventory->get(text);
    if (!table) return s.transformation;
    if (auto t = table->lookup(text)) return *t;
    throw Error(ErrorKind::not_yet_grounded, "sentence '" + std::string(text) + "' is not yet grounded");
}

ConfigSet ground_expression(const Expression& expr, const Configuration& current, const ConfigSet& discovered,
                            const LeafGrounding& grounding) {
    switch (expr.op) {
        case Expression::Op::leaf:
            return oracle_ground(grounding.resolve(expr.text), current, discovered, grounding.exclude_satisfied_current);
        case Expression::Op::and_: {
            const auto a = ground_expression(expr.children[0], current, discovered, grounding);
            const auto b = ground_expression(expr.children[1], current, discovered, grounding);
            ConfigSet out;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
            return out;
        }
        case Expression::Op::or_: {
            auto a = ground_expression(expr.children[0], current, discovered, grounding);
            const auto b = ground_expression(expr.children[1], current, discovered, grounding);
            a.insert(b.begin(), b.end());
            return a;
        }
        case Expression::Op::not_: {
            const auto a = ground_expression(expr.children[0], current, discovered, grounding);
            ConfigSet out;
            std::set_difference(discovered.begin(), discovered.end(), a.begin(), a.end(), std::inserter(out, out.begin()));
            return out;
        }
    }
    return {};
}

// -------------------------------------------------------- instruction following

GoalChoice select_goal(const ConfigSet& candidates, const LearnerState& learner, const GoalGraph& full,
                       const Configuration& current, const CompetenceModel& competence) {
    if (candidates.empty()) throw Error(ErrorKind::no_compatible_goal, "no compatible goal");
    std::optional<GoalChoice> best;
    std::size_t best_len = 0;
    for (const auto& c : candidates) {  // ascending bit strings, so ties keep the smallest
        const auto p = plan(learner, full, current, c);
        if (!p) continue;
        double prob = 1.0;
        for (std::size_t k = 1; k < p->size(); ++k) prob *= competence.probability(learner.practice((*p)[k - 1], (*p)[k]));
        if (!best || prob > best->competence || (prob == best->competence && p->size() < best_len)) {
            best = GoalChoice{c, prob, false};
            best_len = p->size();
        }
    }
    if (best) return *best;
    spdlog::debug("select_goal: no candidate reachable, picking {} lexicographically", candidates.begin()->bits());
    return {*candidates.begin(), 0.0, true};
}

InstructionResult follow_instruction(const Expression& expr, LearnerState& learner, const GoalGraph& full,
                                     const Scene& scene, const LeafGrounding& grounding,
                                     const CompetenceModel& competence, const InstructionSettings& settings, Rng& rng,
                                     const EpisodeObserver* observer) {
    if (settings.attempts < 1) throw Error(ErrorKind::invalid_config, "attempts must be at least 1");
    InstructionResult result;
    result.final_scene = scene;
    ConfigSet failed;
    for (int attempt = 0; attempt < settings.attempts; ++attempt) {
        const auto current = extract_config(result.final_scene);
        auto compatible = ground_expression(expr, current, learner.discovered, grounding);
        for (const auto& f : failed) compatible.erase(f);
        // an instruction asks for a change, whatever its logical form
        if (grounding.exclude_satisfied_current) compatible.erase(current);

        InstructionAttempt record;
        record.compatible = compatible.size();
        if (compatible.empty()) {
            result.attempts.push_back(std::move(record));
            continue;
        }
        const auto choice = select_goal(compatible, learner, full, current, competence);
        record.goal = choice.goal;
        auto outcome = run_episode(learner, full, result.final_scene, choice.goal, competence, settings.max_moves, rng,
                                   observer);
        result.final_scene = outcome.final_scene;
        const bool ok = outcome.success;
        record.outcome = std::move(outcome);
        result.attempts.push_back(std::move(record));
        if (ok) {
            result.success = true;
            break;
        }
        failed.insert(choice.goal);
    }
    return result;
}

nlohmann::json to_json(const InstructionResult& r) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& a : r.attempts) {
        nlohmann::json j{{"compatible", a.compatible}};
        j["goal"] = a.goal ? nlohmann::json(a.goal->bits()) : nlohmann::json(nullptr);
        if (a.outcome) j["outcome"] = to_json(*a.outcome);
        if (!a.goal) j["reason"] = "no compatible goal";
        attempts.push_back(std::move(j));
    }
    return {{"success", r.success}, {"attempts", attempts}, {"final_config", extract_config(r.final_scene).bits()}};
}

}  // namespace taa
