#include "porch/core/error.hpp"
#include "porch/intent/intent.hpp"

#include <fstream>
#include <sstream>

namespace porch::intent {

namespace detail {
extern const std::string_view kBuiltinGrammarJson;
}

namespace {

std::vector<std::string> phrase_tokens(const Json& j, const char* where) {
    if (!j.is_string()) throw Error(ErrorCode::BadConfig, where, "expected string phrase");
    auto toks = tokenize(j.get<std::string>());
    if (toks.empty()) throw Error(ErrorCode::BadConfig, where, "empty phrase");
    return toks;
}

}  // namespace

Grammar grammar_from_json(const Json& j) {
    static const std::vector<std::string> kIntents{"live_summary", "activity_report", "count_query", "last_visitor"};
    Grammar g;
    try {
        for (const auto& w : j.at("wake_words")) g.wake_words.push_back(phrase_tokens(w, "wake_words"));
        // Longest wake word first so "hey alexa" wins over "alexa".
        std::stable_sort(g.wake_words.begin(), g.wake_words.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        const auto& intents = j.at("intents");
        for (const auto& name : kIntents) {
            if (!intents.contains(name)) throw Error(ErrorCode::BadConfig, "intents", "missing " + name);
            auto& alts = g.intents[name];
            for (const auto& alt : intents.at(name)) {
                if (!alt.is_array() || alt.empty()) throw Error(ErrorCode::BadConfig, name, "expected phrase list");
                std::vector<std::vector<std::string>> phrases;
                for (const auto& p : alt) phrases.push_back(phrase_tokens(p, name.c_str()));
                alts.push_back(std::move(phrases));
            }
        }
        for (const auto& [k, v] : intents.items())
            if (std::find(kIntents.begin(), kIntents.end(), k) == kIntents.end())
                throw Error(ErrorCode::BadConfig, "intents", "unknown intent " + k);
        for (const auto& [noun, label] : j.at("count_nouns").items()) g.count_nouns[noun] = label.get<std::string>();
        if (j.contains("live_window_ms")) g.live_window_ms = j["live_window_ms"].get<TimestampMs>();
        if (j.contains("default_phrase")) g.default_phrase = j["default_phrase"].get<std::string>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::BadConfig, "grammar", e.what());
    }
    if (g.live_window_ms <= 0) throw Error(ErrorCode::BadConfig, "live_window_ms");
    resolve_range(g.default_phrase, 86'400'000, 0);
    return g;
}

Grammar load_grammar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadConfig, "grammar", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return grammar_from_json(Json::parse(ss.str()));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::BadConfig, "grammar", e.what());
    }
}

std::string_view builtin_grammar_json() { return detail::kBuiltinGrammarJson; }

const Grammar& builtin_grammar() {
    static const Grammar g = grammar_from_json(Json::parse(detail::kBuiltinGrammarJson));
    return g;
}

}  // namespace porch::intent
