/// Maps a raw completion to a text score.
///
/// Looks for the first standalone `YES` or `NO` word, ignoring case. `YES`
/// gives `(1.0, false)`, `NO` gives `(0.0, false)`, and a completion with
/// neither is an abstention, `(0.0, true)`.
///
/// ```
/// use tracelink::scoring::parse_llm_verdict;
/// assert_eq!(parse_llm_verdict("YES, the PR title matches"), (1.0, false));
/// assert_eq!(parse_llm_verdict("I cannot determine this."), (0.0, true));
/// ```
pub fn parse_llm_verdict(response: &str) -> (f64, bool) {
    for token in response.split(|c: char| !c.is_alphanumeric()) {
        if token.eq_ignore_ascii_case("yes") {
            return (1.0, false);
        }
        if token.eq_ignore_ascii_case("no") {
            return (0.0, false);
        }
    }
    (0.0, true)
}
