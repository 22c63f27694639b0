//! Prompt and response templates. Slots are filled by plain substitution.

use crate::model::{display_category, NormPoint};

pub const CONSTRAINT_SENTENCE: &str = "Your output should not include the ground truth action given in the image.";

pub fn object_understanding_prompt(p: &NormPoint) -> String {
    format!(
        "Given a location on the image, you should recognize the object on this location. The location will be \
         formatted as (x, y), with each coordinate ranging from 0 to 1 and rounded to two decimal places. Direct \
         output the object name, no additional reasoning process is needed. Recognize the object located at {p}."
    )
}

pub fn object_generation_prompt(category: &str) -> String {
    let c = display_category(category);
    format!(
        "Identify all instances of {c} in the provided image. For each detected instance, provide the center \
         location of the object. The predicted location should be formatted as (x, y), with each coordinate ranging \
         from 0 to 1 and rounded to two decimal places. Your output should be in the following format: Detected \
         {c}(s): [(x1, y1), (x2, y2), ...]"
    )
}

pub fn object_generation_response(category: &str, points: &[NormPoint]) -> String {
    let list: Vec<String> = points.iter().map(|p| p.to_string()).collect();
    format!("Detected {}(s): [{}]", display_category(category), list.join(", "))
}

pub fn affordance_understanding_prompt(p: &NormPoint) -> String {
    format!(
        "Given a location on the image, determine if it is navigable for the robot (i.e., on the ground). The \
         location will be formatted as (x, y), with each coordinate ranging from 0 to 1 and rounded to two decimal \
         places. Provide a direct answer with \"yes\" or \"no\" without additional reasoning. Is location {p} \
         navigable?"
    )
}

pub fn affordance_generation_prompt() -> String {
    "Given an image, generate a navigable point for the robot. The output should will be formatted as (x, y), with \
     each coordinate ranging from 0 to 1 and rounded to two decimal places. Please respond directly with the \
     generated point. No additional reasoning is required."
        .to_string()
}

pub fn relationship_understanding_prompt(a: &NormPoint, b: &NormPoint) -> String {
    format!(
        "Describe the spatial relationship between the objects located at coordinates {a} and {b}, with each \
         coordinate ranging from 0 to 1 and rounded to two decimal places."
    )
}

pub fn relationship_understanding_response(a_category: &str, phrase: &str, b_category: &str) -> String {
    format!(
        "The {} is positioned {phrase} the {}.",
        display_category(a_category),
        display_category(b_category)
    )
}

pub fn relationship_generation_prompt(phrase: &str, reference_category: &str) -> String {
    format!(
        "Given the image, point out the object located {phrase} the {}. The output should be formatted as (x, y), \
         with each coordinate ranging from 0 to 1 and rounded to two decimal places. Please respond directly with \
         the generated point. No additional reasoning is required.",
        display_category(reference_category)
    )
}

pub fn compatibility_understanding_prompt(category: &str, from: &NormPoint, to: &NormPoint) -> String {
    format!(
        "Given the image, determine whether the object will collide with other objects after moving it from the \
         initial position to the target position. The point will be formatted as (x, y), with each coordinate \
         ranging from 0 to 1 and rounded to three decimal places. Provide a direct answer with 'yes' or 'no' \
         without additional reasoning. Will a collision occur after moving the {} from {from} to {to}?",
        display_category(category)
    )
}

pub fn compatibility_generation_prompt(category: &str) -> String {
    format!(
        "Generate a collision-free location for the {}. The output should be formatted as (x, y), with each \
         coordinate ranging from 0 to 1 and rounded to two decimal places. Please respond directly with the \
         generated point. No additional reasoning is required.",
        display_category(category)
    )
}

pub fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

/// Eight relation phrases by angle octant, counter-clockwise from "right"
/// with "up" toward the top of the image.
pub const RELATION_PHRASES: [&str; 8] = [
    "to the right of",
    "to the upper right of",
    "above",
    "to the upper left of",
    "to the left of",
    "to the lower left of",
    "below",
    "to the lower right of",
];

/// Phrase describing where `a` lies relative to `b` in the image.
/// Returns `None` when the points coincide.
pub fn relation_phrase(a: &NormPoint, b: &NormPoint) -> Option<&'static str> {
    let dx = a.x() - b.x();
    let up = b.y() - a.y();
    if dx.abs() < 1e-12 && up.abs() < 1e-12 {
        return None;
    }
    let octant = (up.atan2(dx) / std::f64::consts::FRAC_PI_4).round() as i64;
    Some(RELATION_PHRASES[octant.rem_euclid(8) as usize])
}

pub fn nav_direct_prompt(target: &str) -> String {
    let t = display_category(target);
    format!(
        "You are a robot in an unfamiliar environment. Your task is to find the {t} in the environment. Based on \
         the image, predict the optimal location to move next to find the {t}. The predicted location should be in \
         the format (x, y), with each number ranging from 0 to 1 and rounded to two decimal places. Ensure the \
         predicted location is navigable (i.e., on the ground). Please respond directly with: \"I should go to (x, \
         y) to find the {t}.\" No additional reasoning is required."
    )
}

pub fn nav_cot_prompt(target: &str) -> String {
    let t = display_category(target);
    format!(
        "You are a robot in an unfamiliar environment. Your task is to find the {t} in the environment. I will give \
         you a current observation image. Based on this image, predict the optimal next move to find the {t}. The \
         predicted location should be formatted as (x, y), with each coordinate ranging from 0 to 1 and rounded to \
         two decimal places. Ensure the predicted location is navigable (i.e., on the ground). Output your thinking \
         process before getting the final answer. Your output should in the following format:\nThought: [Put your \
         thinking process there. You should think about the location of the target object or the region where it \
         is located. This can be achieved by reasonably imagining the unseen areas based on the room layout]\n\
         Action: [I should go to (x, y) to find the {t}.]"
    )
}

pub fn manip_direct_prompt(instruction: &str) -> String {
    format!(
        "You are a robot arm working at a table. Your task is: {instruction} Based on the image, predict which \
         object to move next and where to place it. Each location should be formatted as (x, y), with each \
         coordinate ranging from 0 to 1 and rounded to two decimal places. Please respond directly with: \"I should \
         move the object from (x1, y1) to (x2, y2).\" If the task is complete, respond with \"I have finished.\" No \
         additional reasoning is required."
    )
}

pub fn manip_cot_prompt(instruction: &str) -> String {
    format!(
        "You are a robot arm working at a table. Your task is: {instruction} I will give you a current observation \
         image. Based on this image, predict which object to move next and where to place it. Each location should \
         be formatted as (x, y), with each coordinate ranging from 0 to 1 and rounded to two decimal places. Output \
         your thinking process before getting the final answer. Your output should in the following format:\n\
         Thought: [Put your thinking process there. You should think about which objects block the goal layout and \
         which free areas can receive them]\nAction: [I should move the object from (x1, y1) to (x2, y2).] If the \
         task is complete, answer with Action: [I have finished.]"
    )
}

/// The provider request wrapped around a chain-of-thought prompt.
pub fn rationale_request(cot_prompt: &str) -> String {
    format!(
        "{cot_prompt}\nThe ground truth action is drawn on the image. Write only the thinking process that leads to \
         it. {CONSTRAINT_SENTENCE}"
    )
}

pub fn nav_subgoal_text(p: &NormPoint, target: &str) -> String {
    format!("I should go to {p} to find the {}.", display_category(target))
}

pub fn nav_rotate_text(left: bool) -> String {
    format!("I should turn {} to look around.", if left { "left" } else { "right" })
}

pub fn manip_move_text(category: &str, pick: &NormPoint, place: &NormPoint) -> String {
    format!("I should move the {} from {pick} to {place}.", display_category(category))
}

pub const MANIP_DONE_TEXT: &str = "I have finished.";

pub fn with_rationale(rationale: &str, action_text: &str) -> String {
    format!("Thought: {rationale}\nAction: {action_text}")
}
