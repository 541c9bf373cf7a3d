#pragma once

#include "porch/core/codec.hpp"
#include "porch/core/query.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace porch::intent {

struct TimeRange {
    TimestampMs from_ms = 0;  // inclusive
    TimestampMs to_ms = 1;    // exclusive

    bool operator==(const TimeRange&) const = default;
};

struct LiveSummary {
    TimestampMs window_ms = 15 * 60'000;
    bool operator==(const LiveSummary&) const = default;
};
struct ActivityReport {
    TimeRange range;
    std::string phrase;  // the time phrase it was resolved from
    bool operator==(const ActivityReport&) const = default;
};
struct CountQuery {
    std::string label;
    TimeRange range;
    std::string phrase;
    bool operator==(const CountQuery&) const = default;
};
struct LastVisitor {
    bool operator==(const LastVisitor&) const = default;
};

using Intent = std::variant<LiveSummary, ActivityReport, CountQuery, LastVisitor>;

struct ParseFailure {
    enum Reason { Unrecognized, Ambiguous } reason = Unrecognized;
    std::string detail;
    bool operator==(const ParseFailure&) const = default;
};

using ParseResult = std::variant<Intent, ParseFailure>;

std::string intent_name(const Intent& i);
std::string to_string(ParseFailure::Reason r);
Json to_json(const TimeRange& r);
Json to_json(const Intent& i);
Json to_json(const ParseFailure& f);

/// Keyword tables driving parse(). Loaded from JSON; see data/grammar.json.
struct Grammar {
    std::vector<std::vector<std::string>> wake_words;  // token sequences
    /// intent name -> alternatives; an alternative matches when every one of
    /// its phrases occurs in the utterance.
    std::map<std::string, std::vector<std::vector<std::vector<std::string>>>> intents;
    std::map<std::string, std::string> count_nouns;  // noun -> label
    TimestampMs live_window_ms = 15 * 60'000;
    std::string default_phrase = "today";
};

/// Throws BadConfig.
Grammar grammar_from_json(const Json& j);
Grammar load_grammar(const std::filesystem::path& path);
/// The grammar compiled into the binary; identical to data/grammar.json.
const Grammar& builtin_grammar();
std::string_view builtin_grammar_json();

/// Lowercases, drops punctuation and apostrophes, splits on whitespace.
std::vector<std::string> tokenize(std::string_view utterance);

/// Total: never throws, any input gives an intent or a ParseFailure.
ParseResult parse(std::string_view utterance, TimestampMs now_ms, int utc_offset_minutes = 0,
                  const Grammar& grammar = builtin_grammar());

/// phrase: today | yesterday | this morning | tonight | last N hours |
/// last N minutes (N as digits or a number word; "last hour" means N = 1).
/// Throws UnknownTimePhrase. Always yields from < to.
TimeRange resolve_range(std::string_view phrase, TimestampMs now_ms, int utc_offset_minutes = 0);

/// Local midnight at or before now, as a UTC timestamp.
TimestampMs local_midnight(TimestampMs now_ms, int utc_offset_minutes) noexcept;

/// Read access to the event store, local or over HTTP.
class StoreAccess {
public:
    virtual ~StoreAccess() = default;
    virtual Summary summarize(const QueryFilter& filter) = 0;
    virtual std::vector<EventRecord> query(const QueryFilter& filter) = 0;
};

struct Answer {
    Intent intent;
    std::variant<Summary, std::size_t, std::optional<EventRecord>> data;
    TimeRange range{};  // meaningless for LastVisitor
    /// ActivityReport only: ids of events in range that carry a snapshot.
    std::vector<std::string> snapshot_events;
    std::string text;
};

Answer execute(const Intent& intent, StoreAccess& store, TimestampMs now_ms, int utc_offset_minutes = 0);

/// Fills answer.text from the templates.
std::string render(const Answer& answer, int utc_offset_minutes = 0);

Json to_json(const Answer& a);

/// "HH:MM on YYYY-MM-DD" in local time.
std::string format_local_time(TimestampMs ts_ms, int utc_offset_minutes);

}  // namespace porch::intent
