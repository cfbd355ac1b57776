"""Prompt templates for the remote chat-completion simulator.

Each prompt has three parts: the dataset's context preamble (scenario
and specialist role), the rendered vignette of currently known values,
and a task-specific instruction whose output contract the strict
parsers in :mod:`dxsel.surrogate` enforce. The sampling prompt bakes in
the diversity instructions (sample from the full plausible range, vary
across draws, assume the condition may or may not be present) so that
replies do not collapse to population averages.
"""

from __future__ import annotations

from .data import DatasetSchema, FeatureSpec

STRICT_SUFFIX = (
    "IMPORTANT: Under NO circumstances provide explanations, commentary, or "
    "text beyond the single numeric float or string requested. The response "
    "MUST be parseable strictly as a float, e.g., 0.512, with no extra words. "
    "If a string is requested no float is required."
)


def risk_prompt(schema: DatasetSchema, vignette: str, disease: str | None = None) -> str:
    disease = disease or schema.disease_name
    return (
        f"{schema.context_preamble} Based on the following clinical data and "
        f"the patient's history, provide an estimate of the probability that "
        f"the patient has {disease} as a single number between 0 and 1. "
        f"Consider key laboratory markers and other pertinent values. When "
        f"these values indicate {disease}, assign a number closer to 1; if "
        f"the values are within normal ranges, assign a value closer to 0. "
        f"Return only the number, without any additional commentary.\n"
        f"{vignette}"
    )


def sampling_prompt(
    schema: DatasetSchema,
    feature: FeatureSpec,
    vignette: str,
    disease: str | None = None,
) -> str:
    disease = disease or schema.disease_name
    if feature.kind == "categorical":
        options = ", ".join(feature.categories)
        value_contract = (
            f"Return exactly one of the following options, with no other "
            f"text: {options}."
        )
    else:
        value_contract = (
            "Return your answer as a single numeric value that can be parsed "
            "as a float, with no additional commentary or units."
        )
    ref = f" Consider the following description: {feature.ref_info}." if feature.ref_info else ""
    return (
        f"{schema.context_preamble} Based on the following clinical data and "
        f"the patient's history, please simulate a random draw from the full "
        f"range of clinically plausible values for {feature.name}.\n\n"
        f"The value should not simply be the average or a central tendency, "
        f"but should vary as if sampled at random from a realistic "
        f"distribution.{ref}\n\n"
        f"Avoid returning the same value repeatedly across multiple draws, "
        f"and ensure the value varies as if sampled from a plausible "
        f"distribution. Introduce randomness by considering edge cases, "
        f"typical values, and outliers within the plausible range.\n\n"
        f"{value_contract}\n\n"
        f"IMPORTANT: Assume that the patient may or may not have {disease}, "
        f"and your sampling should reflect that uncertainty.\n"
        f"{vignette}\n\n"
        f"{STRICT_SUFFIX}"
    )


def implicit_prompt(
    schema: DatasetSchema,
    vignette: str,
    unknown_features: list[str],
    disease: str | None = None,
) -> str:
    disease = disease or schema.disease_name
    return (
        f"{schema.context_preamble} Based solely on the following known "
        f"clinical data, determine which additional feature from the list "
        f"below would be the most informative to sample next for diagnosing "
        f"{disease}.\n\n"
        f"Known Data: {vignette}\n\n"
        f"Unknown Features: {unknown_features}\n\n"
        f"Return only the name of the feature strictly in the form shown in "
        f"the list as a string, without any additional commentary."
    )


def global_prompt(
    schema: DatasetSchema,
    all_features: list[str],
    n: int,
    disease: str | None = None,
) -> str:
    disease = disease or schema.disease_name
    examples = all_features[:2] if len(all_features) >= 2 else all_features
    example_one = f"['{examples[0]}']"
    example_two = f"['{examples[0]}', '{examples[-1]}']"
    return (
        f"{schema.context_preamble} Based on the following list of features: "
        f"{all_features}, please indicate which {n} features you believe are "
        f"the most informative and critical for diagnosing {disease}.\n\n"
        f"Return your answer as a Python list of exactly {n} feature names "
        f"(for example, if n is 1, return {example_one}; if n is 2, return "
        f"{example_two}). Do not include any additional commentary."
    )
