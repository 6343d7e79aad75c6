#pragma once

#include <string>

#include "attrforge/attr_core.hpp"

namespace attrforge {

// Prompt templates use {question}, {response}, {claim}, and {documents}
// placeholders. Defaults are compiled in; a template directory can override
// any of them per file.
struct PromptTemplates {
  std::string response_generation;
  std::string claim_decomposition;
  std::string document_generation;
  std::string attribution;
  std::string attribution_yesno;

  static PromptTemplates defaults();
  // Reads <dir>/<name>.txt for each template that exists, keeping defaults
  // for the rest. A single trailing newline per file is stripped.
  static PromptTemplates load(const std::string& dir);
};

std::string replace_all(std::string text, std::string_view needle,
                        std::string_view replacement);

// "Document [k] (Title: <title>): <body>" lines in citation-index order.
std::string format_document_block(const DocumentSet& docs);

std::string closed_book_prompt(const PromptTemplates& templates,
                               const std::string& question);
std::string decomposition_prompt(const PromptTemplates& templates,
                                 const std::string& response);
std::string document_prompt(const PromptTemplates& templates,
                            const std::string& claim);
std::string attribution_prompt(const PromptTemplates& templates,
                               const std::string& question,
                               const DocumentSet& docs, bool yesno = false);

}  // namespace attrforge
