#ifndef IDFORGE_H
#define IDFORGE_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  IDF_PROFILE_CITIZEN = 0,
  IDF_PROFILE_EXTRANJERO = 1,
} IdfProfile;

typedef enum {
  IDF_STATUS_OK = 0,
  IDF_STATUS_NULL_POINTER = 1,
  IDF_STATUS_INVALID_UTF8 = 2,
  /**
   * Input parsed but breaks a documented invariant.
   */
  IDF_STATUS_INVALID = 3,
  /**
   * Malformed input text.
   */
  IDF_STATUS_SYNTAX = 4,
  IDF_STATUS_RANGE = 5,
  IDF_STATUS_EMPTY_CLASS = 6,
  IDF_STATUS_NOT_PSD = 7,
  IDF_STATUS_DIMENSION = 8,
  IDF_STATUS_PANIC = 9,
} IdfStatus;

/**
 * Parsed, validated card layout.
 */
typedef struct IdfLayout IdfLayout;

/**
 * Accumulator of labelled PAD scores.
 */
typedef struct IdfScores IdfScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Free with
 * [`idf_string_free`].
 */
char *idf_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void idf_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *idf_version(void);

/**
 * RUN check character ('0'-'9' or 'K') for `number` in 1..=99999999.
 */
IdfStatus idf_run_check_digit(uint32_t number, char *out);

/**
 * Formatted RUN such as "12.345.678-5"; fails when `check` does not match.
 */
IdfStatus idf_format_run(uint32_t number, char check, char **out);

/**
 * ICAO 9303 check digit of an MRZ field ('0'-'9').
 */
IdfStatus idf_mrz_check_digit(const char *field, char *out);

/**
 * Seeded persona as JSON, including display strings and the three MRZ lines.
 * `profile` is an [`IdfProfile`] value.
 */
IdfStatus idf_persona_json(uint64_t seed, uint32_t profile, char **out);

/**
 * Positive and negative portrait prompts for seeded face attributes.
 */
IdfStatus idf_face_prompt(uint64_t seed, char **out_positive, char **out_negative);

/**
 * Card-generation prompt for a seeded persona.
 */
IdfStatus idf_card_prompt(uint64_t seed, uint32_t profile, char **out);

/**
 * Parses and validates a layout document. On success `*out` owns a handle
 * to release with [`idf_layout_free`].
 */
IdfStatus idf_layout_parse(const char *json, IdfLayout **out);

/**
 * Bundled layout by template id ("citizen" or "extranjero").
 */
IdfStatus idf_layout_builtin(const char *template_id, IdfLayout **out);

void idf_layout_free(IdfLayout *layout);

/**
 * Number of components, or 0 for NULL.
 */
size_t idf_layout_component_count(const IdfLayout *layout);

/**
 * Canvas size in pixels.
 */
IdfStatus idf_layout_canvas(const IdfLayout *layout, uint32_t *out_width, uint32_t *out_height);

/**
 * Canonical JSON serialization of a layout.
 */
IdfStatus idf_layout_to_json(const IdfLayout *layout, char **out);

IdfScores *idf_scores_new(void);

void idf_scores_free(IdfScores *scores);

/**
 * Adds one record. `true_class` is "bonafide" or an attack species label;
 * higher scores mean "more likely attack".
 */
IdfStatus idf_scores_push(IdfScores *scores, const char *true_class, double score);

size_t idf_scores_len(const IdfScores *scores);

/**
 * Equal error rate and its threshold (may be +/-infinity).
 */
IdfStatus idf_scores_eer(const IdfScores *scores,
                         bool pooled,
                         double *out_rate,
                         double *out_threshold);

/**
 * Lowest BPCER whose worst-case APCER is at most `alpha` (0 < alpha <= 1).
 */
IdfStatus idf_scores_bpcer_at_apcer(const IdfScores *scores,
                                    double alpha,
                                    double *out_bpcer,
                                    double *out_threshold);

/**
 * Full report as JSON. A NaN `threshold` selects the EER threshold.
 */
IdfStatus idf_scores_report_json(const IdfScores *scores,
                                 double threshold,
                                 bool pooled,
                                 char **out);

/**
 * Fréchet distance between two row-major `n x d` float32 feature arrays.
 */
IdfStatus idf_fid(const float *a, size_t n_a, const float *b, size_t n_b, size_t d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IDFORGE_H */
