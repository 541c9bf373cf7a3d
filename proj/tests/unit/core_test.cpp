#include "porch/core/codec.hpp"
#include "porch/core/crypto.hpp"
#include "porch/core/error.hpp"
#include "porch/core/record_log.hpp"
#include "porch/core/segment.hpp"
#include "porch/core/signing.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace porch;

namespace {

DetectionEvent two_detection_event() {
    DetectionEvent e;
    e.event_id = "0f8fad5b-d9cb-469f-a165-70867728950e";
    e.device_id = "doorbell-1";
    e.captured_at_ms = 1'704'207'600'000;
    e.detector_backend = "palette-local";
    e.motion_score = 20.0;
    e.snapshot_ref = "abc123";
    e.detections.push_back({"person", Identity{true, "alice"}, 0.5, {8, 8, 32, 24}});
    e.detections.push_back({"car", std::nullopt, 0.25, {40, 30, 16, 12}});
    return e;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected porch::Error");
    return ErrorCode::HubError;
}

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("porch-core-" + crypto::random_uuid());
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("crypto") {
    TEST_CASE("known digests") {
        CHECK(crypto::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        // RFC 4231 test case 2
        CHECK(crypto::hmac_sha256_hex(crypto::as_bytes("Jefe"), "what do ya want for nothing?") ==
              "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
        CHECK(crypto::crc32(crypto::as_bytes("123456789")) == 0xCBF43926u);
    }

    TEST_CASE("hex and base64 round trip") {
        std::mt19937_64 rng(7);
        for (std::size_t n = 0; n < 40; ++n) {
            crypto::Bytes b(n);
            for (auto& x : b) x = static_cast<std::uint8_t>(rng());
            CHECK(crypto::from_hex(crypto::to_hex(b)) == b);
            CHECK(crypto::base64_decode(crypto::base64_encode(b)) == b);
        }
        CHECK_THROWS(crypto::from_hex("abc"));
        CHECK_THROWS(crypto::base64_decode("abc"));
    }

    TEST_CASE("uuids are v4 and distinct") {
        auto a = crypto::random_uuid(), b = crypto::random_uuid();
        CHECK(a != b);
        CHECK(a.size() == 36);
        CHECK(a[14] == '4');
    }
}

TEST_SUITE("codec") {
    TEST_CASE("zero detections encode as an empty list") {
        auto e = two_detection_event();
        e.detections.clear();
        CHECK(encode_event(e).find("\"detections\":[]") != std::string::npos);
    }

    TEST_CASE("canonical form has sorted keys and trimmed reals") {
        auto bytes = encode_event(two_detection_event());
        CHECK(bytes ==
              R"({"captured_at_ms":1704207600000,"detections":[{"bbox":{"h":24,"w":32,"x":8,"y":8},"confidence":0.5,)"
              R"("identity":{"known":true,"name":"alice"},"label":"person"},{"bbox":{"h":12,"w":16,"x":40,"y":30},)"
              R"("confidence":0.25,"identity":null,"label":"car"}],"detector_backend":"palette-local",)"
              R"("device_id":"doorbell-1","event_id":"0f8fad5b-d9cb-469f-a165-70867728950e","motion_score":20,)"
              R"("snapshot_ref":"abc123"})");
    }

    TEST_CASE("real rendering") {
        CHECK(format_real(1.0) == "1");
        CHECK(format_real(0.0) == "0");
        CHECK(format_real(0.1234567) == "0.123457");
        CHECK(format_real(0.5) == "0.5");
        CHECK(format_real(-0.0000001) == "0");
    }

    TEST_CASE("two-detection round trip and byte stability") {
        auto e = two_detection_event();
        CHECK(decode_event(encode_event(e)) == e);
        CHECK(encode_event(e) == encode_event(e));
    }

    TEST_CASE("non-canonical key order decodes") {
        auto e = two_detection_event();
        auto j = to_json(e);
        auto pretty = j.dump(2);
        CHECK(decode_event(pretty) == e);
    }

    TEST_CASE("confidence out of range names the field") {
        auto j = to_json(two_detection_event());
        j["detections"][0]["confidence"] = 1.5;
        try {
            decode_event(j.dump());
            FAIL("expected InvariantViolation");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::InvariantViolation);
            CHECK(err.detail() == "confidence");
        }
    }

    TEST_CASE("truncated input is malformed") {
        auto bytes = encode_event(two_detection_event());
        CHECK(code_of([&] { decode_event(bytes.substr(0, bytes.size() / 2)); }) == ErrorCode::MalformedEvent);
        CHECK(code_of([&] { decode_event(""); }) == ErrorCode::MalformedEvent);
    }

    TEST_CASE("identity rules") {
        auto j = to_json(two_detection_event());
        j["detections"][1]["identity"] = {{"known", false}, {"name", nullptr}};
        CHECK(code_of([&] { decode_event(j.dump()); }) == ErrorCode::InvariantViolation);
        j = to_json(two_detection_event());
        j["detections"][0]["identity"] = {{"known", false}, {"name", "mallory"}};
        CHECK(code_of([&] { decode_event(j.dump()); }) == ErrorCode::InvariantViolation);
        j = to_json(two_detection_event());
        j["detections"][0].erase("label");
        CHECK(code_of([&] { decode_event(j.dump()); }) == ErrorCode::MalformedEvent);
        j = to_json(two_detection_event());
        j["event_id"] = "not-a-uuid";
        CHECK(code_of([&] { decode_event(j.dump()); }) == ErrorCode::InvariantViolation);
    }

    TEST_CASE("property: arbitrary valid events round trip and encode deterministically") {
        std::mt19937_64 rng(20240102);
        for (int i = 0; i < 2000; ++i) {
            auto e = testing::random_event(rng);
            auto bytes = encode_event(e);
            auto back = decode_event(bytes);
            REQUIRE(back == e);
            REQUIRE(encode_event(back) == bytes);
        }
    }

    TEST_CASE("canonicalize makes arbitrary reals round-trip") {
        auto e = two_detection_event();
        e.detections[0].confidence = 1.0 / 3.0;
        e.motion_score = 10.0 / 7.0;
        auto c = canonicalize(e);
        CHECK(decode_event(encode_event(c)) == c);
        CHECK(c.detections[0].confidence == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    }
}

TEST_SUITE("signing") {
    const crypto::Bytes secret(32, 0x42);
    const TimestampMs t0 = 1'704'207'600'000;
    const std::string nonce = "00112233445566778899aabbccddeeff";

    TEST_CASE("sign then verify at the signing instant") {
        auto req = sign_request("dev-1", secret, "POST", "/v1/events", "hello", t0, nonce);
        CHECK(verify_signature(secret, req, "POST", "/v1/events", "hello", t0) == "dev-1");
    }

    TEST_CASE("every single-bit flip of the body fails") {
        std::string body = "{\"small\":\"body\",\"n\":12345}";
        auto req = sign_request("dev-1", secret, "POST", "/v1/events", body, t0, nonce);
        for (std::size_t i = 0; i < body.size(); ++i)
            for (int bit = 0; bit < 8; ++bit) {
                auto mutated = body;
                mutated[i] = static_cast<char>(mutated[i] ^ (1 << bit));
                CHECK(code_of([&] { verify_signature(secret, req, "POST", "/v1/events", mutated, t0); }) ==
                      ErrorCode::BadSignature);
            }
    }

    TEST_CASE("perturbing method, path, timestamp, nonce or signature fails") {
        auto req = sign_request("dev-1", secret, "POST", "/v1/events", "b", t0, nonce);
        CHECK(code_of([&] { verify_signature(secret, req, "PUT", "/v1/events", "b", t0); }) == ErrorCode::BadSignature);
        CHECK(code_of([&] { verify_signature(secret, req, "POST", "/v1/eventz", "b", t0); }) == ErrorCode::BadSignature);
        for (int bit = 0; bit < 8; ++bit) {
            auto r = req;
            r.timestamp_ms ^= (TimestampMs{1} << bit);
            CHECK(code_of([&] { verify_signature(secret, r, "POST", "/v1/events", "b", t0); }) == ErrorCode::BadSignature);
        }
        for (std::size_t i = 0; i < req.nonce.size(); ++i) {
            auto r = req;
            r.nonce[i] = r.nonce[i] == '0' ? '1' : '0';
            CHECK(code_of([&] { verify_signature(secret, r, "POST", "/v1/events", "b", t0); }) == ErrorCode::BadSignature);
        }
        for (std::size_t i = 0; i < req.signature.size(); ++i) {
            auto r = req;
            r.signature[i] = r.signature[i] == '0' ? '1' : '0';
            CHECK(code_of([&] { verify_signature(secret, r, "POST", "/v1/events", "b", t0); }) == ErrorCode::BadSignature);
        }
        crypto::Bytes other(32, 0x43);
        CHECK(code_of([&] { verify_signature(other, req, "POST", "/v1/events", "b", t0); }) == ErrorCode::BadSignature);
    }

    TEST_CASE("clock skew boundary") {
        auto req = sign_request("dev-1", secret, "GET", "/x", "", t0, nonce);
        CHECK_NOTHROW(verify_signature(secret, req, "GET", "/x", "", t0 + 300'000));
        CHECK_NOTHROW(verify_signature(secret, req, "GET", "/x", "", t0 - 300'000));
        CHECK(code_of([&] { verify_signature(secret, req, "GET", "/x", "", t0 + 301'000); }) == ErrorCode::ClockSkew);
        CHECK(code_of([&] { verify_signature(secret, req, "GET", "/x", "", t0 - 300'001); }) == ErrorCode::ClockSkew);
    }

    TEST_CASE("replays inside the window are rejected") {
        NonceWindow window;
        auto req = sign_request("dev-1", secret, "GET", "/x", "", t0, nonce);
        CHECK_NOTHROW(verify_signature(secret, req, "GET", "/x", "", t0, &window));
        CHECK(code_of([&] { verify_signature(secret, req, "GET", "/x", "", t0 + 299'000, &window); }) ==
              ErrorCode::ReplayedNonce);
        // Same nonce from another device is a different key.
        auto other = sign_request("dev-2", secret, "GET", "/x", "", t0, nonce);
        CHECK_NOTHROW(verify_signature(secret, other, "GET", "/x", "", t0, &window));
    }

    TEST_CASE("nonce window forgets after the replay window") {
        NonceWindow window(kReplayWindowMs, 10'000);
        CHECK(window.remember("d", "n1", t0));
        CHECK_FALSE(window.remember("d", "n1", t0 + kReplayWindowMs));
        CHECK(window.remember("d", "n2", t0 + kReplayWindowMs + 20'001));
        CHECK(window.remember("d", "n1", t0 + kReplayWindowMs + 20'001));
    }

    TEST_CASE("malformed nonce or signature is a bad signature") {
        auto req = sign_request("dev-1", secret, "GET", "/x", "", t0, "short");
        CHECK(code_of([&] { verify_signature(secret, req, "GET", "/x", "", t0); }) == ErrorCode::BadSignature);
        CHECK(make_nonce().size() == 32);
    }
}

TEST_SUITE("record_log") {
    TEST_CASE("append and read back") {
        auto path = temp_path("log.bin");
        {
            RecordLog log(path, false);
            log.append("one");
            log.append(std::string("\0two\0", 5));
            log.append("");
        }
        auto c = RecordLog::read(path);
        REQUIRE(c.records.size() == 3);
        CHECK(c.records[1] == std::string("\0two\0", 5));
        CHECK_FALSE(c.torn_tail);
        std::ifstream in(path, std::ios::binary);
        std::string magic(5, '\0');
        in.read(magic.data(), 5);
        CHECK(magic == "PODB1");
    }

    TEST_CASE("missing file is empty") {
        CHECK(RecordLog::read(temp_path("absent")).records.empty());
    }

    TEST_CASE("torn tail is dropped, checksum failure is corruption") {
        auto path = temp_path("log.bin");
        {
            RecordLog log(path, false);
            log.append("alpha");
            log.append("beta");
        }
        auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 2);
        auto c = RecordLog::read(path);
        CHECK(c.records == std::vector<std::string>{"alpha"});
        CHECK(c.torn_tail);

        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(5 + 4);
            f.put('A');
        }
        CHECK(code_of([&] { RecordLog::read(path); }) == ErrorCode::OutboxCorrupt);
        auto moved = RecordLog::quarantine(path);
        CHECK(std::filesystem::exists(moved));
        CHECK_FALSE(std::filesystem::exists(path));
    }

    TEST_CASE("rewrite replaces contents and keeps appending") {
        auto path = temp_path("log.bin");
        RecordLog log(path, false);
        log.append("a");
        log.append("b");
        log.rewrite({"c"});
        log.append("d");
        CHECK(RecordLog::read(path).records == std::vector<std::string>{"c", "d"});
    }
}

TEST_SUITE("segment") {
    std::vector<Frame> make_frames(int n) {
        std::vector<Frame> out;
        for (int i = 0; i < n; ++i) {
            Frame f(4, 3, 1000 + 100 * i, static_cast<std::uint64_t>(i));
            for (std::size_t k = 0; k < f.pixels.size(); ++k) f.pixels[k] = static_cast<std::uint8_t>(k + i);
            out.push_back(std::move(f));
        }
        return out;
    }

    TEST_CASE("round trip") {
        auto frames = make_frames(20);
        auto bytes = encode_segment(frames);
        CHECK(bytes.size() == 9 + 20 * (16 + 36));
        CHECK(decode_segment(bytes) == frames);
        CHECK(segment_duration_ms(frames) == 2000);
        CHECK(segment_duration_ms(std::string_view(bytes)) == 2000);
        CHECK(is_valid_segment(bytes));
    }

    TEST_CASE("empty segment is valid") {
        auto bytes = encode_segment({});
        CHECK(decode_segment(bytes).empty());
        CHECK(segment_duration_ms(std::string_view(bytes)) == 0);
    }

    TEST_CASE("inconsistent lengths are rejected") {
        auto bytes = encode_segment(make_frames(2));
        CHECK_FALSE(is_valid_segment(bytes.substr(0, bytes.size() - 1)));
        CHECK_FALSE(is_valid_segment(bytes + "x"));
        auto bad = bytes;
        bad[0] = 'X';
        CHECK(code_of([&] { decode_segment(bad); }) == ErrorCode::BadContainer);
        bad = bytes;
        bad[4] = 2;
        CHECK_FALSE(is_valid_segment(bad));
        bad = bytes;
        bad[5] = 3;  // frame_count says 3
        CHECK_FALSE(is_valid_segment(bad));
    }
}
