#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "skillsentry/rules.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;

TEST_CASE("seed rule base covers all six categories with at least three rules each") {
  RuleBase rb = test::seed_rules();
  CHECK(rb.rules.size() >= 18);
  std::map<SsoCategory, int> per_category;
  for (const auto& r : rb.rules) per_category[r.category] += 1;
  for (SsoCategory c : {SsoCategory::Exec, SsoCategory::Net, SsoCategory::File, SsoCategory::Env,
                        SsoCategory::Install, SsoCategory::Crypto}) {
    INFO("category ", to_string(c));
    CHECK(per_category[c] >= 3);
  }
}

TEST_CASE("rule ids are unique and triggers parse") {
  RuleBase rb = test::seed_rules();
  std::set<std::string> ids;
  for (const auto& r : rb.rules) {
    CHECK(ids.insert(r.rule_id).second);
    CHECK(r.trigger.wildcard_count >= 0);
  }
}

TEST_CASE("duplicate rule id is a parse error") {
  std::string text =
      "sso-rules v1\n"
      "[rule dup]\ncategory = Exec\ntype = exec\nsubtype = shell_interpreter_execution\n"
      "languages = python\ntrigger = os.system(*)\ncaptures = command:1\norigin = seed\n"
      "[rule dup]\ncategory = Exec\ntype = exec\nsubtype = shell_interpreter_execution\n"
      "languages = python\ntrigger = os.popen(*)\ncaptures = command:1\norigin = seed\n";
  CHECK_THROWS_AS(parse_rule_base(text, Taxonomy::builtin()), RuleParseError);
}

TEST_CASE("trigger syntax errors are rejected with the rule id") {
  auto rule_with_trigger = [](const std::string& trig) {
    return "sso-rules v1\n[rule bad.rule]\ncategory = Exec\ntype = exec\n"
           "subtype = shell_interpreter_execution\nlanguages = python\ntrigger = " +
           trig + "\norigin = seed\n";
  };
  for (const std::string trig : {"os.system((*)", "os.system(*))", "*.run(*)", "os.system(x*)",
                                 "os.", "os.system(*).", "* | bash"}) {
    INFO("trigger: ", trig);
    try {
      parse_rule_base(rule_with_trigger(trig), Taxonomy::builtin());
      // `os.system(*))` style imbalance must not slip through silently.
      CHECK(trig == "impossible");
    } catch (const RuleParseError& e) {
      CHECK(std::string(e.what()).find("bad.rule") != std::string::npos);
    }
  }
}

TEST_CASE("capture slots must belong to the category schema") {
  std::string text =
      "sso-rules v1\n[rule bad.slot]\ncategory = Exec\ntype = exec\n"
      "subtype = shell_interpreter_execution\nlanguages = python\n"
      "trigger = os.system(*)\ncaptures = endpoint:1\norigin = seed\n";
  CHECK_THROWS_AS(parse_rule_base(text, Taxonomy::builtin()), RuleParseError);
}

TEST_CASE("capture may not reference a missing wildcard") {
  std::string text =
      "sso-rules v1\n[rule bad.pos]\ncategory = Exec\ntype = exec\n"
      "subtype = shell_interpreter_execution\nlanguages = python\n"
      "trigger = os.system(*)\ncaptures = command:2\norigin = seed\n";
  CHECK_THROWS_AS(parse_rule_base(text, Taxonomy::builtin()), RuleParseError);
}

TEST_CASE("rule base serialization round-trips losslessly") {
  RuleBase rb = test::seed_rules();
  std::string text = rule_base_to_text(rb);
  RuleBase back = parse_rule_base(text, test::seed_taxonomy());
  CHECK(back.version == rb.version);
  REQUIRE(back.rules.size() == rb.rules.size());
  for (std::size_t i = 0; i < rb.rules.size(); ++i) {
    CHECK(back.rules[i].rule_id == rb.rules[i].rule_id);
    CHECK(back.rules[i].trigger.text == rb.rules[i].trigger.text);
    CHECK(back.rules[i].sso_subtype == rb.rules[i].sso_subtype);
    CHECK(back.rules[i].languages == rb.rules[i].languages);
    CHECK(back.rules[i].captures.size() == rb.rules[i].captures.size());
  }
  CHECK(rule_base_to_text(back) == text);
}

TEST_CASE("fuzzed seed file mutations never crash the parser") {
  std::string seed = read_file(test::data_dir() + "/seed.rules");
  std::mt19937 rng(20260809);
  for (int round = 0; round < 200; ++round) {
    std::string mutated = seed;
    std::uniform_int_distribution<std::size_t> pos(0, mutated.size() - 1);
    std::uniform_int_distribution<int> byte(32, 126);
    for (int k = 0; k < 5; ++k) mutated[pos(rng)] = static_cast<char>(byte(rng));
    try {
      RuleBase rb = parse_rule_base(mutated, test::seed_taxonomy());
      CHECK(rb.rules.size() <= 200);
    } catch (const RuleParseError&) {
    } catch (const IoError&) {
    } catch (const std::invalid_argument&) {
    } catch (const std::out_of_range&) {
    }
  }
}

TEST_CASE("taxonomy files parse, round-trip, and reject malformed input") {
  Taxonomy tax = test::seed_taxonomy();
  CHECK(tax.contains("exec", "shell_interpreter_execution"));
  CHECK(tax.contains("prompt_side_effect", "implied_exfiltration"));
  CHECK_FALSE(tax.contains("exec", "downloads_script"));
  CHECK_FALSE(tax.contains("nope", "anything"));
  CHECK(Taxonomy::parse(tax.to_text()).to_text() == tax.to_text());

  CHECK_THROWS_AS(Taxonomy::parse("wrong header\nexec: a\n"), IoError);
  CHECK_THROWS_AS(Taxonomy::parse("sso-taxonomy v1\nmalformed line\n"), IoError);
  CHECK_THROWS_AS(Taxonomy::parse("sso-taxonomy v1\nbogus_type: a, b\n"), std::invalid_argument);
}

TEST_CASE("rule base header fields: version and held-out reference") {
  std::string text =
      "sso-rules v1\nversion = 7\nheld_out = corpora/benign\n"
      "[rule r1]\ncategory = Exec\ntype = exec\nsubtype = shell_interpreter_execution\n"
      "languages = python\ntrigger = os.system(*)\ncaptures = command:1\norigin = seed\n";
  RuleBase rb = parse_rule_base(text, Taxonomy::builtin());
  CHECK(rb.version == 7);
  CHECK(rb.held_out_path == "corpora/benign");
  std::string round = rule_base_to_text(rb);
  CHECK(round.find("version = 7") != std::string::npos);
  CHECK(round.find("held_out = corpora/benign") != std::string::npos);
}

TEST_CASE("covered script languages exclude the text pseudo-tag") {
  RuleBase rb = test::seed_rules();
  auto langs = rb.covered_script_languages();
  CHECK(std::find(langs.begin(), langs.end(), "python") != langs.end());
  CHECK(std::find(langs.begin(), langs.end(), "javascript") != langs.end());
  CHECK(std::find(langs.begin(), langs.end(), "text") == langs.end());
}
