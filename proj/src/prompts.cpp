#include "attrforge/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace attrforge {

namespace {

const char* kResponseGeneration =
    "Given a question, generate a detailed and informative response that "
    "covers multiple perspectives and synthesizes information from various "
    "sources. Limit the response to a maximum of five statements.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Response:";

const char* kClaimDecomposition =
    "Given a detailed and informative response, break it into its "
    "constituent claims. Identify and list each distinct claim, ensuring to "
    "capture all essential elements and nuances presented in the original "
    "response.\n"
    "\n"
    "Response: {response}\n"
    "\n"
    "Claims:";

const char* kDocumentGeneration =
    "Given a claim, generate a 100-word document with a title. The main "
    "content of the document should elaborate on the claims and contain the "
    "main content of the claim.\n"
    "\n"
    "Claim: {claim}\n"
    "\n"
    "Documents:";

const char* kAttribution =
    "Instruction: Write an accurate, engaging, and concise answer for the "
    "given question using only the provided search results (some of which "
    "might be irrelevant) and cite them properly. Use an unbiased and "
    "journalistic tone. Always cite for any factual claim. When citing "
    "several search results, use [1][2][3]. Cite at least one document and "
    "at most three documents in each sentence. If multiple documents support "
    "the sentence, only cite a minimum sufficient subset of the documents.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "{documents}\n"
    "\n"
    "Answer:";

const char* kAttributionYesNo =
    "Instruction: Answer \"yes\" or \"no\" first. Then, write a clear and "
    "concise answer that combines reasoning with relevant search results and "
    "cite the sources properly, even if some might be irrelevant.\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "{documents}\n"
    "\n"
    "Answer:";

bool load_template(const std::string& dir, const std::string& name,
                   std::string* out) {
  std::filesystem::path path = std::filesystem::path(dir) / (name + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  *out = std::move(text);
  return true;
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.response_generation = kResponseGeneration;
  t.claim_decomposition = kClaimDecomposition;
  t.document_generation = kDocumentGeneration;
  t.attribution = kAttribution;
  t.attribution_yesno = kAttributionYesNo;
  return t;
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::invalid_argument("template directory not found: " + dir);
  }
  PromptTemplates t = defaults();
  load_template(dir, "response_generation", &t.response_generation);
  load_template(dir, "claim_decomposition", &t.claim_decomposition);
  load_template(dir, "document_generation", &t.document_generation);
  load_template(dir, "attribution", &t.attribution);
  load_template(dir, "attribution_yesno", &t.attribution_yesno);
  return t;
}

std::string replace_all(std::string text, std::string_view needle,
                        std::string_view replacement) {
  if (needle.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), replacement);
    pos += replacement.size();
  }
  return text;
}

std::string format_document_block(const DocumentSet& docs) {
  std::string out;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    const Document& d = docs.docs[i];
    if (!out.empty()) out += '\n';
    out += "Document [" + std::to_string(i + 1) + "] (Title: " +
           normalize_whitespace(d.title) + "): " +
           normalize_whitespace(d.body);
  }
  return out;
}

std::string closed_book_prompt(const PromptTemplates& templates,
                               const std::string& question) {
  if (question.empty()) {
    throw std::invalid_argument("closed_book_prompt: empty question");
  }
  return replace_all(templates.response_generation, "{question}", question);
}

std::string decomposition_prompt(const PromptTemplates& templates,
                                 const std::string& response) {
  if (response.empty()) {
    throw std::invalid_argument("decomposition_prompt: empty response");
  }
  return replace_all(templates.claim_decomposition, "{response}", response);
}

std::string document_prompt(const PromptTemplates& templates,
                            const std::string& claim) {
  if (claim.empty()) {
    throw std::invalid_argument("document_prompt: empty claim");
  }
  return replace_all(templates.document_generation, "{claim}", claim);
}

std::string attribution_prompt(const PromptTemplates& templates,
                               const std::string& question,
                               const DocumentSet& docs, bool yesno) {
  if (question.empty()) {
    throw std::invalid_argument("attribution_prompt: empty question");
  }
  if (docs.empty()) {
    throw std::invalid_argument("attribution_prompt: empty document set");
  }
  std::string prompt = yesno ? templates.attribution_yesno
                             : templates.attribution;
  prompt = replace_all(std::move(prompt), "{question}", question);
  return replace_all(std::move(prompt), "{documents}",
                     format_document_block(docs));
}

}  // namespace attrforge
