#ifndef MFQ_TOOLKIT_H
#define MFQ_TOOLKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by the fallible functions.
 */
typedef enum MfqStatus {
  MFQ_STATUS_OK = 0,
  MFQ_STATUS_NULL_POINTER = 1,
  MFQ_STATUS_INVALID_UTF8 = 2,
  MFQ_STATUS_PARSE_ERROR = 3,
  MFQ_STATUS_INVALID_ARGUMENT = 4,
} MfqStatus;

/**
 * Opaque questionnaire handle.
 */
typedef struct MfqQuestionnaire MfqQuestionnaire;

/**
 * t-SNE hyperparameters for [`mfq_tsne_embed`].
 */
typedef struct MfqTsneParams {
  double perplexity;
  uintptr_t iterations;
  double learning_rate;
  uint64_t seed;
} MfqTsneParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *mfq_last_error_message(void);

/**
 * Load and validate a questionnaire file; the handle must be released
 * with [`mfq_questionnaire_free`].
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MfqStatus mfq_questionnaire_load(const char *path, struct MfqQuestionnaire **out);

/**
 * The questionnaire bundled with the toolkit.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MfqStatus mfq_questionnaire_bundled(struct MfqQuestionnaire **out);

/**
 * Release a questionnaire handle. Null is a no-op.
 *
 * # Safety
 * `handle` must have come from a load call and not been freed already.
 */
void mfq_questionnaire_free(struct MfqQuestionnaire *handle);

/**
 * Number of items in the questionnaire behind the handle.
 *
 * # Safety
 * `handle` must be a live questionnaire handle.
 */
uintptr_t mfq_questionnaire_item_count(const struct MfqQuestionnaire *handle);

/**
 * Score a complete answer vector.
 *
 * `answers` holds 32 ratings in item-index order; `out_scores` receives
 * harm, fairness, ingroup, authority, purity.
 *
 * # Safety
 * `handle` must be live; `answers` must point at 32 readable bytes;
 * `out_scores` at 5 writable doubles.
 */
enum MfqStatus mfq_score(const struct MfqQuestionnaire *handle,
                         const uint8_t *answers,
                         double *out_scores);

/**
 * Evaluate the catch items from a 32-rating answer vector.
 *
 * # Safety
 * `answers` must point at 32 readable bytes; `out_passed` must be writable.
 */
enum MfqStatus mfq_validate_catch(const uint8_t *answers, bool *out_passed);

/**
 * Extract a rating from a completion. `scale` is 0 for relevance, 1 for
 * agreement. `out_rating` receives 0..=5, or -1 when nothing parses
 * (still `Ok`: unparseable is a value, not an error).
 *
 * # Safety
 * `completion` must be a valid NUL-terminated string; `out_rating` writable.
 */
enum MfqStatus mfq_parse_rating(const char *completion, int32_t scale, int8_t *out_rating);

/**
 * Majority-vote a sample multiset with the toolkit's tie rule.
 *
 * # Safety
 * `samples` must point at `len` readable bytes; `out_rating` writable.
 */
enum MfqStatus mfq_majority_vote(const uint8_t *samples, uintptr_t len, uint8_t *out_rating);

/**
 * Sum of absolute errors between two 5-component score vectors.
 *
 * # Safety
 * Both pointers must reference 5 readable doubles.
 */
double mfq_sae(const double *a, const double *b);

/**
 * Probability-weighted donation over {declined, $10, $20, $50, $100, $250}.
 *
 * # Safety
 * `probabilities` must reference 6 readable doubles; `out` must be writable.
 */
enum MfqStatus mfq_expected_donation(const double *probabilities, double *out);

/**
 * Embed `k` points of dimension `dim` into 2-D.
 *
 * `coords` is row-major `k * dim`; `out_xy` receives row-major `k * 2`.
 * Deterministic for a given seed.
 *
 * # Safety
 * `coords` must reference `k * dim` readable doubles, `params` a valid
 * struct, and `out_xy` `k * 2` writable doubles.
 */
enum MfqStatus mfq_tsne_embed(const double *coords,
                              uintptr_t k,
                              uintptr_t dim,
                              const struct MfqTsneParams *params,
                              double *out_xy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFQ_TOOLKIT_H */
