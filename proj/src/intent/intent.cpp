#include "porch/intent/intent.hpp"

#include "porch/core/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <ctime>
#include <set>

namespace porch::intent {

namespace {

constexpr TimestampMs kMinute = 60'000;
constexpr TimestampMs kHour = 60 * kMinute;
constexpr TimestampMs kDay = 24 * kHour;

// Dividing with rounding towards negative infinity.
TimestampMs floor_div(TimestampMs a, TimestampMs b) noexcept {
    auto q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

std::optional<TimestampMs> number_word(const std::string& w) {
    static const std::map<std::string, TimestampMs> kWords{
        {"one", 1},      {"two", 2},       {"three", 3},    {"four", 4},      {"five", 5},     {"six", 6},
        {"seven", 7},    {"eight", 8},     {"nine", 9},     {"ten", 10},      {"eleven", 11},  {"twelve", 12},
        {"thirteen", 13}, {"fourteen", 14}, {"fifteen", 15}, {"sixteen", 16}, {"seventeen", 17}, {"eighteen", 18},
        {"nineteen", 19}, {"twenty", 20},  {"thirty", 30},  {"forty", 40},    {"fifty", 50},   {"sixty", 60}};
    if (auto it = kWords.find(w); it != kWords.end()) return it->second;
    if (w.empty() || w.size() > 6 || !std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    return std::stoll(w);
}

std::optional<TimestampMs> unit_ms(const std::string& w) {
    if (w == "hour" || w == "hours" || w == "hr" || w == "hrs") return kHour;
    if (w == "minute" || w == "minutes" || w == "min" || w == "mins") return kMinute;
    return std::nullopt;
}

struct TimePhrase {
    std::string normalized;
    std::size_t length = 0;
};

std::optional<TimePhrase> time_phrase_at(const std::vector<std::string>& t, std::size_t i) {
    auto at = [&](std::size_t k) -> const std::string& {
        static const std::string empty;
        return k < t.size() ? t[k] : empty;
    };
    if (at(i) == "today" || at(i) == "yesterday" || at(i) == "tonight") return TimePhrase{at(i), 1};
    if (at(i) == "this" && at(i + 1) == "morning") return TimePhrase{"this morning", 2};
    if (at(i) == "last" || at(i) == "past") {
        if (auto u = unit_ms(at(i + 1)))
            return TimePhrase{fmt::format("last 1 {}", *u == kHour ? "hours" : "minutes"), 2};
        auto n = number_word(at(i + 1));
        auto u = unit_ms(at(i + 2));
        if (n && u) return TimePhrase{fmt::format("last {} {}", *n, *u == kHour ? "hours" : "minutes"), 3};
    }
    return std::nullopt;
}

bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i)
        if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    return false;
}

bool is_relative(const std::string& phrase) { return phrase.rfind("last ", 0) == 0; }

ParseResult parse_impl(std::string_view utterance, TimestampMs now_ms, int offset, const Grammar& g) {
    auto tokens = tokenize(utterance);
    for (const auto& wake : g.wake_words) {
        if (tokens.size() >= wake.size() && std::equal(wake.begin(), wake.end(), tokens.begin())) {
            tokens.erase(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(wake.size()));
            break;
        }
    }
    if (tokens.empty()) return ParseFailure{ParseFailure::Unrecognized, "empty utterance"};

    std::vector<std::string> matched;
    for (const auto& [name, alternatives] : g.intents) {
        bool hit = std::any_of(alternatives.begin(), alternatives.end(), [&](const auto& alt) {
            return std::all_of(alt.begin(), alt.end(), [&](const auto& p) { return contains_phrase(tokens, p); });
        });
        if (hit) matched.push_back(name);
    }
    if (matched.empty()) return ParseFailure{ParseFailure::Unrecognized, "no intent pattern matched"};
    if (matched.size() > 1) {
        std::string names;
        for (const auto& m : matched) names += (names.empty() ? "" : ", ") + m;
        return ParseFailure{ParseFailure::Ambiguous, "matches " + names};
    }

    std::set<std::string> phrases;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (auto tp = time_phrase_at(tokens, i)) {
            phrases.insert(tp->normalized);
            i += tp->length - 1;
        }
    }
    if (phrases.size() > 1) return ParseFailure{ParseFailure::Ambiguous, "more than one time phrase"};
    std::optional<std::string> phrase;
    if (!phrases.empty()) phrase = *phrases.begin();

    const auto& name = matched.front();
    if (name == "live_summary") {
        if (!phrase) return Intent{LiveSummary{g.live_window_ms}};
        auto range = resolve_range(*phrase, now_ms, offset);
        if (is_relative(*phrase)) return Intent{LiveSummary{range.to_ms - range.from_ms}};
        // A calendar phrase turns "what is happening" into a report over that day part.
        return Intent{ActivityReport{range, *phrase}};
    }
    if (name == "activity_report") {
        auto p = phrase.value_or(g.default_phrase);
        return Intent{ActivityReport{resolve_range(p, now_ms, offset), p}};
    }
    if (name == "count_query") {
        std::set<std::string> labels;
        for (const auto& t : tokens)
            if (auto it = g.count_nouns.find(t); it != g.count_nouns.end()) labels.insert(it->second);
        if (labels.empty()) return ParseFailure{ParseFailure::Unrecognized, "nothing countable named"};
        if (labels.size() > 1) return ParseFailure{ParseFailure::Ambiguous, "more than one thing to count"};
        auto p = phrase.value_or(g.default_phrase);
        return Intent{CountQuery{*labels.begin(), resolve_range(p, now_ms, offset), p}};
    }
    return Intent{LastVisitor{}};
}

}  // namespace

std::string intent_name(const Intent& i) {
    static const char* kNames[] = {"live_summary", "activity_report", "count_query", "last_visitor"};
    return kNames[i.index()];
}

std::string to_string(ParseFailure::Reason r) { return r == ParseFailure::Ambiguous ? "ambiguous" : "unrecognized"; }

Json to_json(const TimeRange& r) { return {{"from_ms", r.from_ms}, {"to_ms", r.to_ms}}; }

Json to_json(const Intent& i) {
    Json j{{"type", intent_name(i)}};
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LiveSummary>) {
                j["window_ms"] = v.window_ms;
            } else if constexpr (std::is_same_v<T, ActivityReport>) {
                j["range"] = to_json(v.range);
                j["phrase"] = v.phrase;
            } else if constexpr (std::is_same_v<T, CountQuery>) {
                j["label"] = v.label;
                j["range"] = to_json(v.range);
                j["phrase"] = v.phrase;
            }
        },
        i);
    return j;
}

Json to_json(const ParseFailure& f) { return {{"reason", to_string(f.reason)}, {"detail", f.detail}}; }

std::vector<std::string> tokenize(std::string_view utterance) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : utterance) {
        if (c == '\'' ) continue;
        if (c < 0x80 && std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

ParseResult parse(std::string_view utterance, TimestampMs now_ms, int utc_offset_minutes, const Grammar& grammar) {
    try {
        return parse_impl(utterance, now_ms, utc_offset_minutes, grammar);
    } catch (const std::exception& e) {
        return ParseFailure{ParseFailure::Unrecognized, e.what()};
    }
}

TimestampMs local_midnight(TimestampMs now_ms, int utc_offset_minutes) noexcept {
    const TimestampMs offset = static_cast<TimestampMs>(utc_offset_minutes) * kMinute;
    return floor_div(now_ms + offset, kDay) * kDay - offset;
}

TimeRange resolve_range(std::string_view phrase, TimestampMs now_ms, int utc_offset_minutes) {
    auto tokens = tokenize(phrase);
    auto tp = time_phrase_at(tokens, 0);
    if (!tp || tp->length != tokens.size()) throw Error(ErrorCode::UnknownTimePhrase, std::string(phrase));
    const auto midnight = local_midnight(now_ms, utc_offset_minutes);
    TimeRange r;
    const auto& p = tp->normalized;
    if (p == "today") {
        r = {midnight, now_ms};
    } else if (p == "yesterday") {
        r = {midnight - kDay, midnight};
    } else if (p == "this morning") {
        r = {midnight, std::min(midnight + 12 * kHour, now_ms)};
    } else if (p == "tonight") {
        r = {midnight + 18 * kHour, std::min(midnight + kDay, now_ms)};
    } else {
        auto rel = tokenize(p);  // last N hours|minutes
        auto n = std::stoll(rel[1]);
        if (n < 1) throw Error(ErrorCode::UnknownTimePhrase, std::string(phrase), "N must be at least 1");
        r = {now_ms - n * (rel[2] == "hours" ? kHour : kMinute), now_ms};
    }
    // Right at midnight "today" is empty; keep the range well-formed.
    if (r.to_ms <= r.from_ms) r.to_ms = r.from_ms + 1;
    return r;
}

Answer execute(const Intent& intent, StoreAccess& store, TimestampMs now_ms, int utc_offset_minutes) {
    Answer a{intent, Summary{}, {}, {}, {}};
    auto range_filter = [](const TimeRange& r) {
        QueryFilter f;
        f.from_ms = r.from_ms;
        f.to_ms = r.to_ms;
        return f;
    };
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LiveSummary>) {
                a.range = {now_ms - v.window_ms, now_ms};
                a.data = store.summarize(range_filter(a.range));
            } else if constexpr (std::is_same_v<T, ActivityReport>) {
                a.range = v.range;
                a.data = store.summarize(range_filter(a.range));
                auto f = range_filter(a.range);
                f.limit = kMaxQueryLimit;
                for (const auto& r : store.query(f))
                    if (r.event.snapshot_ref) a.snapshot_events.push_back(r.event.event_id);
            } else if constexpr (std::is_same_v<T, CountQuery>) {
                a.range = v.range;
                auto f = range_filter(a.range);
                f.label = v.label;
                a.data = store.summarize(f).total_events;
            } else {
                QueryFilter f;
                f.label = std::string(kPersonLabel);
                f.limit = 1;
                auto rs = store.query(f);
                a.data = rs.empty() ? std::optional<EventRecord>{} : std::optional<EventRecord>{rs.front()};
            }
        },
        intent);
    a.text = render(a, utc_offset_minutes);
    return a;
}

namespace {

std::string duration_words(TimestampMs ms) {
    if (ms % kHour == 0) return ms == kHour ? "hour" : fmt::format("{} hours", ms / kHour);
    if (ms % kMinute == 0) return ms == kMinute ? "minute" : fmt::format("{} minutes", ms / kMinute);
    return fmt::format("{} seconds", ms / 1000);
}

std::string range_words(const Intent& intent) {
    if (auto* l = std::get_if<LiveSummary>(&intent)) return "in the last " + duration_words(l->window_ms);
    std::string phrase;
    if (auto* r = std::get_if<ActivityReport>(&intent)) phrase = r->phrase;
    if (auto* c = std::get_if<CountQuery>(&intent)) phrase = c->phrase;
    if (is_relative(phrase)) {
        auto t = tokenize(phrase);
        auto n = std::stoll(t[1]);
        return "in the last " + duration_words(n * (t[2] == "hours" ? kHour : kMinute));
    }
    return phrase;
}

std::string noun(const std::string& label, std::size_t n) {
    if (label == kPersonLabel) return n == 1 ? "person" : "people";
    if (n == 1 || (!label.empty() && label.back() == 's')) return label;
    return label + "s";
}

}  // namespace

std::string format_local_time(TimestampMs ts_ms, int utc_offset_minutes) {
    auto local = floor_div(ts_ms + static_cast<TimestampMs>(utc_offset_minutes) * kMinute, 1000);
    std::time_t t = static_cast<std::time_t>(local);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:02}:{:02} on {:04}-{:02}-{:02}", tm.tm_hour, tm.tm_min, tm.tm_year + 1900, tm.tm_mon + 1,
                       tm.tm_mday);
}

std::string render(const Answer& a, int utc_offset_minutes) {
    if (auto* s = std::get_if<Summary>(&a.data)) {
        const auto when = range_words(a.intent);
        if (s->total_events == 0) return "No activity " + when + ".";
        std::vector<std::string> parts;
        auto describe = [&](const std::string& label, std::size_t n) {
            auto part = fmt::format("{} {}", n, noun(label, n));
            if (label == kPersonLabel && s->known_count + s->unknown_count > 0) {
                if (s->known_count && s->unknown_count)
                    part += fmt::format(" ({} known, {} unknown)", s->known_count, s->unknown_count);
                else if (s->known_count)
                    part += fmt::format(" ({} known)", s->known_count);
                else
                    part += fmt::format(" ({} unknown)", s->unknown_count);
            }
            parts.push_back(part);
        };
        // People are counted per detection so the known/unknown split adds up.
        if (s->counts_by_label.count(std::string(kPersonLabel)))
            describe(std::string(kPersonLabel), s->known_count + s->unknown_count);
        for (const auto& [label, n] : s->counts_by_label)
            if (label != kPersonLabel) describe(label, n);
        auto text = fmt::format("{} event{} {}", s->total_events, s->total_events == 1 ? "" : "s", when);
        if (!parts.empty()) text += ": " + fmt::format("{}", fmt::join(parts, ", "));
        return text + ".";
    }
    if (auto* n = std::get_if<std::size_t>(&a.data)) {
        const auto& q = std::get<CountQuery>(a.intent);
        if (*n == 0) return fmt::format("No {} {}.", noun(q.label, 2), range_words(a.intent));
        return fmt::format("{} {} {}.", *n, noun(q.label, *n), range_words(a.intent));
    }
    const auto& rec = std::get<std::optional<EventRecord>>(a.data);
    if (!rec) return "No one has been at the door yet.";
    auto when = format_local_time(rec->event.captured_at_ms, utc_offset_minutes);
    for (const auto& d : rec->event.detections) {
        if (d.label != kPersonLabel) continue;
        if (d.identity && d.identity->known) {
            if (d.identity->name) return fmt::format("{} was at the door at {}.", *d.identity->name, when);
            return fmt::format("A known person was at the door at {}.", when);
        }
    }
    return fmt::format("An unknown person was at the door at {}.", when);
}

Json to_json(const Answer& a) {
    Json j{{"intent", to_json(a.intent)}, {"text", a.text}};
    if (std::holds_alternative<LastVisitor>(a.intent))
        j["range"] = nullptr;
    else
        j["range"] = to_json(a.range);
    if (auto* s = std::get_if<Summary>(&a.data))
        j["data"] = {{"summary", to_json(*s)}};
    else if (auto* n = std::get_if<std::size_t>(&a.data))
        j["data"] = {{"count", *n}};
    else {
        const auto& rec = std::get<std::optional<EventRecord>>(a.data);
        j["data"] = {{"event", rec ? to_json(*rec) : Json(nullptr)}};
    }
    j["snapshot_events"] = a.snapshot_events;
    return j;
}

}  // namespace porch::intent
