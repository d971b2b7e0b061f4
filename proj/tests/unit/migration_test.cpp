#include <exmig/errors.hpp>
#include <exmig/llm.hpp>
#include <exmig/migration.hpp>

#include <gtest/gtest.h>

using namespace exmig;

namespace {

Exploit sample_exploit()
{
    Exploit e;
    e.entry = "src/ExploitTest.java";
    e.files = {
        {"src/ExploitTest.java", "class ExploitTest {\n  void t() {\n    Lib.check(x);\n    fail(\"boom\");\n  }\n}\n"},
        {"src/Helper.java", "class Helper {}\n"},
    };
    e.assertion = AssertionSpec{"ExploitTest", "t", "boom", {}};
    return e;
}

const char* kDiff = R"(diff --git a/src/Lib.java b/src/Lib.java
--- a/src/Lib.java
+++ b/src/Lib.java
@@ -1,3 +1,3 @@ class Lib {
 class Lib {
-  static void check(Object o) {}
+  static void verify(Object o) {}
 }
diff --git a/src/User.java b/src/User.java
--- a/src/User.java
+++ b/src/User.java
@@ -5,3 +5,3 @@ class User {
   void go() {
-    Lib.check(this);
+    Lib.verify(this);
   }
)";

MigrationContext sample_context(const HunkIndex& index)
{
    MigrationContext ctx;
    ctx.indicator.kind = FailureKind::MissingMethod;
    ctx.indicator.message = "cannot find symbol\n  symbol: method check(Object)";
    ctx.identifiers.tokens = {"check"};
    const auto& files = index.files();
    ctx.causing = {{{files[0].hunks[0].hunk_id}, 10, DiffOrigin::Cause, 0}};
    ctx.supporting = {{{files[1].hunks[0].hunk_id}, 7, DiffOrigin::Support, 0}};
    return ctx;
}

} // namespace

TEST(Prompt, SectionsInOrder)
{
    const HunkIndex index(parse_unified_diff(kDiff));
    const auto ctx = sample_context(index);
    const auto exploit = sample_exploit();
    const auto prompt = build_prompt(ctx, ctx.causing[0], exploit, LlmStage::Localize, index);

    const auto indicator = prompt.find("## Failure indicator");
    const auto ids = prompt.find("## Failure identifiers");
    const auto selected = prompt.find("## Root-cause library changes");
    const auto supporting = prompt.find("## Supporting library changes");
    const auto current = prompt.find("## Current exploit");
    const auto task = prompt.find("## Task");
    ASSERT_NE(task, std::string::npos);
    EXPECT_LT(indicator, ids);
    EXPECT_LT(ids, selected);
    EXPECT_LT(selected, supporting);
    EXPECT_LT(supporting, current);
    EXPECT_LT(current, task);

    EXPECT_NE(prompt.find("Kind: MissingMethod"), std::string::npos);
    EXPECT_NE(prompt.find("-  static void check(Object o) {}"), std::string::npos);
    EXPECT_NE(prompt.find("+    Lib.verify(this);"), std::string::npos);
    // Localize numbers the entry file's lines.
    EXPECT_NE(prompt.find("   3|     Lib.check(x);"), std::string::npos);
    EXPECT_EQ(prompt_template_version(), "v1");
}

TEST(Prompt, AdaptNamesLocationAndAssertion)
{
    const HunkIndex index(parse_unified_diff(kDiff));
    const auto ctx = sample_context(index);
    const EditLocation loc{"src/ExploitTest.java", 3, 3, false, ""};
    const auto prompt = build_prompt(ctx, ctx.causing[0], sample_exploit(), LlmStage::Adapt, index, &loc);
    EXPECT_NE(prompt.find("src/ExploitTest.java:3"), std::string::npos);
    EXPECT_NE(prompt.find("\"boom\""), std::string::npos);
    EXPECT_EQ(prompt.find("   3|"), std::string::npos);
}

TEST(Prompt, StaysUnderCap)
{
    std::string big = "--- a/src/Big.java\n+++ b/src/Big.java\n@@ -1,400 +1,400 @@\n";
    for (int i = 0; i < 200; ++i)
        big += " filler line number " + std::to_string(i) + " with padding text to make it long enough\n";
    big += "-  check(a);\n+  verify(a);\n";
    for (int i = 0; i < 199; ++i)
        big += " trailing filler " + std::to_string(i) + " with more padding text to make it long enough\n";
    const HunkIndex index(parse_unified_diff(big));
    MigrationContext ctx;
    ctx.indicator.kind = FailureKind::MissingMethod;
    ctx.identifiers.tokens = {"check"};
    const ScoredDiff d{{index.files()[0].hunks[0].hunk_id}, 10, DiffOrigin::Cause, 0};

    const auto full = build_prompt(ctx, d, sample_exploit(), LlmStage::Adapt, index, nullptr, 100000);
    EXPECT_NE(full.find("trailing filler 198"), std::string::npos);

    const std::size_t cap = 1500;
    const auto capped = build_prompt(ctx, d, sample_exploit(), LlmStage::Adapt, index, nullptr, cap);
    EXPECT_LE(capped.size(), cap * 4);
    EXPECT_NE(capped.find("-  check(a);"), std::string::npos);
    EXPECT_NE(capped.find("## Current exploit"), std::string::npos);
    EXPECT_EQ(capped.find("trailing filler 198"), std::string::npos);
}

TEST(Prompt, TruncateAroundAnchors)
{
    const auto files = parse_unified_diff("--- a/x\n+++ b/x\n@@ -1,6 +1,6 @@\n a\n b\n c\n-check\n+verify\n d\n e\n");
    const auto out = truncate_around_anchors(files[0].hunks[0], {"check"}, 1);
    EXPECT_EQ(out, "@@ -1,6 +1,6 @@\n...\n c\n-check\n+verify\n...\n");
}

TEST(Location, ParsesAndClamps)
{
    const auto e = sample_exploit();
    auto loc = parse_location("src/ExploitTest.java:3", e);
    EXPECT_EQ(loc.file, "src/ExploitTest.java");
    EXPECT_EQ(loc.first_line, 3);
    EXPECT_EQ(loc.last_line, 3);
    EXPECT_FALSE(loc.clamped);

    loc = parse_location("The edit belongs at `ExploitTest.java:2-4`.", e);
    EXPECT_EQ(loc.first_line, 2);
    EXPECT_EQ(loc.last_line, 4);
    EXPECT_EQ(loc.to_string(), "src/ExploitTest.java:2-4");

    loc = parse_location("somewhere", e);
    EXPECT_TRUE(loc.clamped);
    EXPECT_EQ(loc.first_line, 1);
    EXPECT_EQ(loc.last_line, 6);
    EXPECT_FALSE(loc.warning.empty());

    EXPECT_TRUE(parse_location("src/Lib.java:3", e).clamped);
    EXPECT_TRUE(parse_location("src/ExploitTest.java:40", e).clamped);
    EXPECT_TRUE(parse_location("src/ExploitTest.java:4-2", e).clamped);
    EXPECT_EQ(parse_location("exploit/src/Helper.java:1", e).file, "src/Helper.java");
}

TEST(Fences, ParsesInfoPaths)
{
    const auto blocks = parse_fenced_blocks("text\n```java src/A.java\nx\n```\nmore\n```\ny\n```\n```path=B.java\nz\n```");
    ASSERT_EQ(blocks.size(), 3u);
    EXPECT_EQ(blocks[0].path, "src/A.java");
    EXPECT_EQ(blocks[0].body, "x\n");
    EXPECT_EQ(blocks[1].path, "");
    EXPECT_EQ(blocks[2].path, "B.java");
    EXPECT_TRUE(parse_fenced_blocks("```java\nunterminated\n").empty());
}

TEST(SanityGate, AcceptsWholeFileEdit)
{
    const auto e = sample_exploit();
    const EditLocation loc{"src/ExploitTest.java", 3, 3, false, ""};
    const auto r = apply_adaptation(
        "```java src/ExploitTest.java\nclass ExploitTest {\n  void t() {\n    Lib.verify(x);\n    fail(\"boom\");\n  }\n}\n```",
        e, loc);
    ASSERT_TRUE(r.accepted) << r.rejection;
    EXPECT_EQ(r.changed, (std::vector<std::string>{"src/ExploitTest.java"}));
    EXPECT_NE(r.exploit.files.at("src/ExploitTest.java").find("Lib.verify"), std::string::npos);

    // A block without a path edits the located file.
    const auto bare = apply_adaptation("```\nclass Helper { int x; }\n```", e, {"src/Helper.java", 1, 1, false, ""});
    ASSERT_TRUE(bare.accepted);
    EXPECT_EQ(bare.changed, (std::vector<std::string>{"src/Helper.java"}));
}

TEST(SanityGate, Rejections)
{
    const auto e = sample_exploit();
    const EditLocation loc{"src/ExploitTest.java", 1, 6, true, ""};
    EXPECT_EQ(apply_adaptation("", e, loc).rejection, "empty response");
    EXPECT_EQ(apply_adaptation("just prose", e, loc).rejection, "no fenced code block");
    EXPECT_NE(apply_adaptation("```java src/Lib.java\nclass Lib {}\n```", e, loc).rejection.find("outside"),
              std::string::npos);
    EXPECT_NE(apply_adaptation("```java src/ExploitTest.java\n\n```", e, loc).rejection.find("empty file"),
              std::string::npos);
    const auto dropped = apply_adaptation("```java src/ExploitTest.java\nclass ExploitTest {}\n```", e, loc);
    EXPECT_FALSE(dropped.accepted);
    EXPECT_EQ(dropped.rejection, "edit removes the expected assertion");
    EXPECT_EQ(dropped.exploit, e);
}

TEST(Stages, LocalizeAndAdaptThroughMock)
{
    const HunkIndex index(parse_unified_diff(kDiff));
    const auto ctx = sample_context(index);
    const auto e = sample_exploit();
    ScriptedMockBackend llm;
    llm.add_rule({LlmStage::Localize, {"check"}, "src/ExploitTest.java:3"});
    llm.add_rule({LlmStage::Adapt, {"src/ExploitTest.java:3"},
                  "```java src/ExploitTest.java\nclass ExploitTest {\n  void t() {\n    Lib.verify(x);\n    "
                  "fail(\"boom\");\n  }\n}\n```"});
    const auto loc = localize_edit(llm, ctx, ctx.causing[0], e, index);
    EXPECT_EQ(loc.location.first_line, 3);
    EXPECT_GT(loc.input_tokens, 0);
    const auto adapted = adapt_exploit(llm, ctx, ctx.causing[0], e, loc.location, index);
    EXPECT_TRUE(adapted.accepted);
    EXPECT_GT(adapted.output_tokens, 0);
}
