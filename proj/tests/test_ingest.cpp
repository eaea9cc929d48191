#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "oracle.hpp"
#include "rmmt/error.hpp"
#include "rmmt/ingest.hpp"
#include "rmmt/tree.hpp"

using namespace rmmt;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rmmt::Error");
  return Errc::config_error;
}

struct TempDir {
  std::filesystem::path dir;
  TempDir() {
    dir = std::filesystem::temp_directory_path() /
          ("rmmt_ingest_" + std::to_string(std::rand()));
    std::filesystem::create_directories(dir);
  }
  ~TempDir() { std::filesystem::remove_all(dir); }
  std::filesystem::path file(const std::string& name) const { return dir / name; }
};

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("xml structure maps to parentheses") {
  CHECK(ingest::xml_to_bp_string("<a/>").seq.to_string() == "()");
  CHECK(ingest::xml_to_bp_string("<a></a>").seq.to_string() == "()");
  CHECK(ingest::xml_to_bp_string("<a><b/><c><d/></c></a>").seq.to_string() == "(()(()))");
  CHECK(ingest::xml_to_bp_string("<a>text<b>more</b>tail</a>").seq.to_string() == "(())");
  CHECK(ingest::xml_to_bp_string(R"(<a x="1" y='<&>'><b z="/"/></a>)").seq.to_string() ==
        "(())");
  CHECK(ingest::xml_to_bp_string("<?xml version=\"1.0\"?>\n<!DOCTYPE a>\n<a><!-- <b> --></a>")
            .seq.to_string() == "()");
  CHECK(ingest::xml_to_bp_string("<a><![CDATA[ <fake> ]]></a>").seq.to_string() == "()");
  CHECK(ingest::xml_to_bp_string("<ns:a><ns:b/></ns:a>").seq.to_string() == "(())");
  CHECK(ingest::xml_to_bp_string("  \n\t<a/>  \n").seq.to_string() == "()");
  CHECK(ingest::xml_to_bp_string("<a/>").node_count() == 1);
  CHECK(ingest::xml_to_bp_string("<a><b/><c/></a>").node_count() == 3);
}

TEST_CASE("malformed xml is rejected with its defect named") {
  CHECK(code_of([] { ingest::xml_to_bp_string("<a><b></a></b>"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("<a>"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("</a>"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("<a></b>"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("<a"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("<a><!-- never closed"); }) ==
        Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("plain text"); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string(""); }) == Errc::malformed_xml);
  CHECK(code_of([] { ingest::xml_to_bp_string("<a/><b/>"); }) == Errc::malformed_xml);
}

TEST_CASE("parenthesis text accepts whitespace and reports bad bytes") {
  CHECK(ingest::parse_bp_text_string("(())()").seq.to_string() == "(())()");
  CHECK(ingest::parse_bp_text_string(" ( ( ) )\n()\t ").seq.to_string() == "(())()");
  CHECK(ingest::parse_bp_text_string("").seq.size() == 0);
  CHECK(code_of([] { ingest::parse_bp_text_string("(()x)"); }) == Errc::bad_char);
  CHECK(code_of([] { ingest::parse_bp_text_string("(()"); }) == Errc::unbalanced);
  CHECK(code_of([] { ingest::parse_bp_text_string("())("); }) == Errc::unbalanced);

  // forests are balanced concatenations; the flag can forbid them
  CHECK(ingest::parse_bp_text_string("()()", "<s>", true).seq.to_string() == "()()");
  CHECK(code_of([] { ingest::parse_bp_text_string("()()", "<s>", false); }) ==
        Errc::unbalanced);
  CHECK(ingest::parse_bp_text_string("(())", "<s>", false).seq.to_string() == "(())");
}

TEST_CASE("packed round-trips through serialize and parse") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 40; ++round) {
    std::string s = oracle::random_balanced(std::size_t(rng() % 200), rng);
    ParenSeq seq = ParenSeq::from_string(s);
    std::ostringstream out;
    ingest::serialize_bp(seq, ingest::BpFormat::packed, out);
    std::istringstream in(out.str());
    CHECK(ingest::parse_bp_packed(in).seq.to_string() == s);
  }
  // text round-trip as well
  std::ostringstream out;
  ingest::serialize_bp(ParenSeq::from_string("(())()"), ingest::BpFormat::text, out);
  CHECK(ingest::parse_bp_text_string(out.str()).seq.to_string() == "(())()");
}

TEST_CASE("packed framing is enforced byte by byte") {
  auto packed = [](const std::string& s) {
    std::ostringstream out;
    ingest::serialize_bp(ParenSeq::from_string(s), ingest::BpFormat::packed, out);
    return out.str();
  };

  std::string good = packed("(())");
  REQUIRE(good.size() == 9);  // 8-byte header + 1 payload byte
  CHECK(good.substr(0, 8) == std::string("\x04\x00\x00\x00\x00\x00\x00\x00", 8));
  CHECK(std::uint8_t(good[8]) == 0b11000000u);  // MSB-first: ( ( ) ) -> 1 1 0 0

  // truncated payload
  std::istringstream t1(good.substr(0, 8));
  CHECK(code_of([&] { ingest::parse_bp_packed(t1); }) == Errc::input_error);
  // trailing garbage
  std::istringstream t2(good + "x");
  CHECK(code_of([&] { ingest::parse_bp_packed(t2); }) == Errc::input_error);
  // nonzero padding bits in the tail byte
  std::string bad_pad = good;
  bad_pad[8] = char(0b11000001u);
  std::istringstream t3(bad_pad);
  CHECK(code_of([&] { ingest::parse_bp_packed(t3); }) == Errc::input_error);
  // unbalanced payload: bits 1110 decode to "((()"
  std::string unbal = packed("(())");
  unbal[8] = char(0b11100000u);
  std::istringstream t4(unbal);
  CHECK(code_of([&] { ingest::parse_bp_packed(t4); }) == Errc::unbalanced);
  // empty sequence is fine
  std::istringstream t5(std::string(8, '\0'));
  CHECK(ingest::parse_bp_packed(t5).seq.size() == 0);
}

TEST_CASE("random generation is deterministic, balanced and seed-sensitive") {
  ingest::BpDocument a = ingest::random_balanced(5000, 42);
  ingest::BpDocument b = ingest::random_balanced(5000, 42);
  ingest::BpDocument c = ingest::random_balanced(5000, 43);
  CHECK(a.seq.size() == 10000);
  CHECK(a.seq == b.seq);
  CHECK(!(a.seq == c.seq));
  CHECK(oracle::balanced(a.seq.to_string()));
  CHECK(oracle::balanced(c.seq.to_string()));
  CHECK(ingest::random_balanced(0, 1).seq.size() == 0);
  CHECK(ingest::random_balanced(1, 9).seq.to_string() == "()");

  // frozen expectation so cross-platform drift in the generator gets caught
  ingest::BpDocument d = ingest::random_balanced(8, 12345);
  CHECK(d.seq.to_string() == "(((((())()()))))");
}

TEST_CASE("file loading dispatches on extension and content") {
  TempDir td;

  write_file(td.file("doc.xml"), "<a><b/><c><d/></c></a>");
  CHECK(ingest::load_path(td.file("doc.xml").string()).seq.to_string() == "(()(()))");

  write_file(td.file("doc.bp"), "(()(()))\n");
  CHECK(ingest::load_path(td.file("doc.bp").string()).seq.to_string() == "(()(()))");

  write_file(td.file("doc.txt"), " () ( ) ");
  CHECK(ingest::load_path(td.file("doc.txt").string()).seq.to_string() == "()()");

  std::ostringstream packed;
  ingest::serialize_bp(ParenSeq::from_string("(()())"), ingest::BpFormat::packed, packed);
  write_file(td.file("doc.bpk"), packed.str());
  CHECK(ingest::load_path(td.file("doc.bpk").string()).seq.to_string() == "(()())");

  // sniffing without a helpful extension
  write_file(td.file("noext_xml"), "  <a><b/></a>");
  CHECK(ingest::load_path(td.file("noext_xml").string()).seq.to_string() == "(())");
  write_file(td.file("noext_text"), "(())");
  CHECK(ingest::load_path(td.file("noext_text").string()).seq.to_string() == "(())");

  CHECK(code_of([&] { ingest::load_path(td.file("missing.xml").string()); }) ==
        Errc::input_error);

  // a loaded document feeds straight into a tree build
  ingest::BpDocument doc = ingest::load_path(td.file("doc.xml").string());
  Tree t(doc.seq, 0.75);
  CHECK(t.to_string() == "(()(()))");
  CHECK(t.validate().ok());
}
