#include <doctest.h>

#include "qsearch/retrieval/html_clean.hpp"

using namespace qsearch;
using namespace qsearch::retrieval;

TEST_CASE("full-width text and scripts") {
    const auto doc = clean_document("<p>Ｈello，　ｗorld　１２３</p><script>x</script>", "https://e.com/a");
    REQUIRE(doc);
    CHECK(doc->clean_text == "Hello, world 123");
}

TEST_CASE("navigation-only page is discarded") {
    CHECK_FALSE(clean_document("<html><body><nav><a href='/'>Home</a> <a href='/x'>News</a></nav>"
                               "<footer>Copyright 2024 Example Inc.</footer></body></html>",
                               "https://e.com/"));
    CHECK_FALSE(clean_document("", "https://e.com/"));
}

TEST_CASE("phone numbers and emails are removed") {
    const auto doc = clean_document("<p>Call 555-123-4567 or mail a@b.com</p>", "https://e.com/");
    REQUIRE(doc);
    CHECK(doc->clean_text.find("555") == std::string::npos);
    CHECK(doc->clean_text.find("a@b.com") == std::string::npos);
    CHECK(doc->clean_text == "Call or mail");
}

TEST_CASE("phone formats") {
    CHECK(clean_line("tel (555) 123-4567 now") == "tel now");
    CHECK(clean_line("tel +1 555.123.4567 now") == "tel now");
    CHECK(clean_line("mobile 13812345678 ok") == "mobile ok");
    CHECK(clean_line("office 010-12345678 ok") == "office ok");
    CHECK(clean_line("population 8336817 in 2023") == "population 8336817 in 2023");
    CHECK(clean_line("on 2024-04-08 at 10:30") == "on 2024-04-08 at 10:30");
}

TEST_CASE("boilerplate and emoji") {
    CHECK(clean_line("Great results 🎉 Read More") == "Great results");
    CHECK(clean_line("Click to Continue") == "");
    CHECK(clean_line("Share") == "");
    CHECK(clean_line("Share prices rose") == "Share prices rose");
    CHECK(clean_line("sun ☀️ today") == "sun today");
}

TEST_CASE("half-width mapping") {
    CHECK(to_half_width("ＡＢＣ！１") == "ABC!1");
    CHECK(to_half_width("①②⑳") == "1220");
    CHECK(to_half_width("中文。") == "中文。");
}

TEST_CASE("entities") {
    CHECK(decode_entities("a &amp; b &lt;c&gt; &#65;&#x42; &nbsp;") == "a & b <c> AB \u00a0");
    CHECK(decode_entities("AT&T &unknown;") == "AT&T &unknown;");
}

TEST_CASE("block structure becomes line and paragraph breaks") {
    const auto doc = clean_document("<article><h1>Title</h1><p>First para.</p><p>Second <b>bold</b> para.</p>"
                                    "<ul><li>one</li><li>two</li></ul></article>",
                                    "https://e.com/");
    REQUIRE(doc);
    CHECK(doc->clean_text == "Title\n\nFirst para.\n\nSecond bold para.\n\none\ntwo");
}

TEST_CASE("title, time and images") {
    const auto doc = clean_document(
        "<html><head><title>Page &amp; Title</title>"
        "<meta property=\"article:published_time\" content=\"2024-04-08T10:00:00Z\"></head>"
        "<body><main><p>Body text here.</p>"
        "<figure><img src=\"/img/eclipse.jpg\" alt=\"Totality\" width=\"800\" height=\"600\">"
        "<figcaption>The eclipse over Texas</figcaption></figure>"
        "<img data-src=\"pic.png\" src=\"data:image/gif;base64,AAAA\">"
        "<aside><img src=\"/ad.png\"></aside></main></body></html>",
        "https://news.example.com/2024/story.html?x=1");
    REQUIRE(doc);
    CHECK(doc->title == "Page & Title");
    REQUIRE(doc->report_time);
    CHECK(doc->report_time->iso() == "2024-04-08T10:00:00Z");
    REQUIRE(doc->images.size() == 2);
    CHECK(doc->images[0].url == "https://news.example.com/img/eclipse.jpg");
    CHECK(doc->images[0].width == 800);
    CHECK(doc->images[0].alt_text == "Totality");
    CHECK(doc->images[0].caption == std::optional<std::string>("The eclipse over Texas"));
    CHECK(doc->images[1].url == "https://news.example.com/2024/pic.png");
    CHECK_FALSE(doc->images[1].caption);
    CHECK(doc->clean_text.find("The eclipse over Texas") != std::string::npos);
}

TEST_CASE("time element and h1 fallbacks") {
    const auto doc = clean_document("<h1>Headline</h1><time datetime=\"2023-05-01\">May 1</time><p>x y</p>",
                                    "https://e.com/");
    REQUIRE(doc);
    CHECK(doc->title == "Headline");
    REQUIRE(doc->report_time);
    CHECK(doc->report_time->iso() == "2023-05-01");
}

TEST_CASE("url resolution") {
    CHECK(resolve_url("https://a.com/x/y.html", "z.png") == "https://a.com/x/z.png");
    CHECK(resolve_url("https://a.com/x/y.html", "/z.png") == "https://a.com/z.png");
    CHECK(resolve_url("https://a.com", "z.png") == "https://a.com/z.png");
    CHECK(resolve_url("http://a.com/x/", "//cdn.com/z.png") == "http://cdn.com/z.png");
    CHECK(resolve_url("http://a.com/", "data:abc").empty());
}

TEST_CASE("malformed markup does not throw") {
    for (const char* html : {"<p>unclosed <b>bold", "</div></p>text", "<<>>", "<p attr='x>y", "<!-- open",
                             "\xff\xfe<p>bytes</p>", "a < b and c > d"}) {
        CHECK_NOTHROW(clean_document(html, "https://e.com/"));
    }
    const auto doc = clean_document("a < b and c > d", "https://e.com/");
    REQUIRE(doc);
    CHECK(doc->clean_text == "a < b and c > d");
}
