use super::exec::{ErrorKind, ExecContext, RuntimeError};
use super::expr;
use super::registry::{ArgSpec, ArgType, Args, Registry};
use super::value::Value;
use crate::agent::{ExploreStatus, ExploreTarget};
use crate::geometry::Point;
use crate::gridworld::Action;
use crate::perception::{self, Detection};
use crate::pointnav::{NavOutcome, NavStatus};

/// Upper bound on `turn(times=...)`; two full revolutions.
const MAX_TURNS: f64 = 24.0;

fn text<'a>(args: &'a Args, name: &str) -> Option<&'a str> {
    match args.get(name) {
        Some(Value::Text(t)) => Some(t),
        _ => None,
    }
}

fn invalid(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorKind::InvalidValue, msg)
}

fn perception_err(e: perception::PerceptionError) -> RuntimeError {
    RuntimeError::new(ErrorKind::Perception, e.to_string())
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

fn nearest(items: &[Detection]) -> Option<&Detection> {
    items
        .iter()
        .min_by(|a, b| a.range.total_cmp(&b.range).then(a.object_id.cmp(&b.object_id)))
}

fn detect(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let queries = split_list(text(args, "query").unwrap_or_default());
    if queries.is_empty() {
        return Err(invalid("detect needs a non-empty query"));
    }
    let items = ctx.agent.detect(&queries);
    Ok(Value::Detections {
        origin: ctx.agent.observation().pose,
        items,
    })
}

fn classify(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let Some(Value::Detections { items, .. }) = args.get("target") else {
        unreachable!("signature guarantees detections");
    };
    let options = split_list(text(args, "options").unwrap_or_default());
    if options.is_empty() {
        return Err(invalid("classify needs at least one option"));
    }
    match nearest(items) {
        None => Ok(Value::Text(perception::UNKNOWN_ANSWER.into())),
        Some(d) => perception::classify(ctx.agent.scene(), d, &options)
            .map(Value::Text)
            .map_err(perception_err),
    }
}

fn answer(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let question = text(args, "question").unwrap_or_default();
    match args.get("image") {
        Some(Value::Image(r)) => perception::answer_image(ctx.agent.scene(), r, question)
            .map(Value::Text)
            .map_err(perception_err),
        _ => Ok(Value::Text(perception::answer(
            ctx.agent.scene(),
            ctx.agent.observation(),
            question,
        ))),
    }
}

fn match_goal(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let Some(Value::Image(r)) = args.get("target") else {
        unreachable!("signature guarantees an image");
    };
    let agent = &*ctx.agent;
    perception::match_image(agent.scene(), agent.observation(), agent.embedder(), r)
        .map(Value::Number)
        .map_err(perception_err)
}

fn count(_: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    match args.get("items") {
        Some(Value::Detections { items, .. }) => Ok(Value::Number(items.len() as f64)),
        _ => unreachable!("signature guarantees detections"),
    }
}

fn is_found(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let positive = match args.get("target") {
        Some(Value::Nav(n)) => n.status == NavStatus::Reached,
        Some(Value::Explore(e)) => e.status == ExploreStatus::Found,
        Some(Value::Detections { items, .. }) => !items.is_empty(),
        Some(Value::Bool(b)) => *b,
        _ => unreachable!("signature guarantees an outcome"),
    };
    let check = match args.get("check") {
        Some(Value::Bool(b)) => *b,
        _ => true,
    };
    let found = positive && check;
    if found {
        ctx.agent.declare_found()?;
    }
    Ok(Value::Bool(found))
}

fn eval(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let src = text(args, "expr").unwrap_or_default();
    expr::evaluate(src, &ctx.env).map_err(|e| RuntimeError::new(ErrorKind::Eval, e.to_string()))
}

fn navigate_to(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let point: Option<Point> = match args.get("target") {
        Some(Value::Point(p)) => Some(*p),
        Some(Value::Explore(e)) => e.point,
        Some(Value::Detections { origin, items }) => {
            nearest(items).map(|d| origin.position().offset(origin.heading + d.bearing, d.range))
        }
        _ => unreachable!("signature guarantees a target"),
    };
    let Some(point) = point else {
        return Ok(Value::Nav(NavOutcome {
            status: NavStatus::Blocked,
            steps_used: 0,
            final_distance: 0.0,
        }));
    };
    let outcome = ctx.agent.navigate(point)?;
    if outcome.status == NavStatus::BudgetExhausted {
        return Err(RuntimeError::new(
            ErrorKind::BudgetExhausted,
            format!("budget ran out {:.2}m from the waypoint", outcome.final_distance),
        ));
    }
    Ok(Value::Nav(outcome))
}

fn explore_scene(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let target = match args.get("target") {
        Some(Value::Text(t)) => ExploreTarget::Text(t.clone()),
        Some(Value::Image(r)) => ExploreTarget::Image(r.clone()),
        _ => unreachable!("signature guarantees text or image"),
    };
    let queries = match (text(args, "query"), &target) {
        (Some(q), _) => split_list(q),
        (None, ExploreTarget::Text(t)) => vec![t.clone()],
        (None, ExploreTarget::Image(r)) => {
            vec![perception::answer_image(ctx.agent.scene(), r, "what object is this").map_err(perception_err)?]
        }
    };
    if queries.is_empty() {
        return Err(invalid("explore_scene needs a non-empty target"));
    }
    Ok(Value::Explore(ctx.agent.explore(&target, &queries)?))
}

fn return_value(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let v = args.get("value").cloned().unwrap_or(Value::None);
    ctx.answer = Some(v.clone());
    Ok(v)
}

fn turn(ctx: &mut ExecContext<'_>, args: &Args) -> Result<Value, RuntimeError> {
    let action = match text(args, "direction").map(str::to_lowercase).as_deref() {
        Some("left") => Action::MoveLeft,
        Some("right") => Action::MoveRight,
        other => {
            return Err(invalid(format!(
                "turn direction must be 'left' or 'right', got {other:?}"
            )))
        }
    };
    let times = match args.get("times") {
        Some(Value::Number(n)) => *n,
        _ => 1.0,
    };
    if times.fract() != 0.0 || !(0.0..=MAX_TURNS).contains(&times) {
        return Err(invalid(format!(
            "turn times must be a whole number in 0..={MAX_TURNS}, got {times}"
        )));
    }
    ctx.agent.turn(action, times as u32)?;
    Ok(Value::None)
}

impl Registry {
    /// The eleven navigation modules.
    pub fn standard() -> Registry {
        use ArgType::*;
        let req = ArgSpec::required;
        let opt = ArgSpec::optional;
        let mut r = Registry::new();
        let table: Vec<(&str, &str, Vec<ArgSpec>, super::registry::Handler)> = vec![
            (
                "detect",
                "find objects matching a comma-separated query in the current view",
                vec![req("image", Visual), req("query", Text)],
                detect,
            ),
            (
                "classify",
                "pick which of comma-separated options best describes the nearest detection",
                vec![req("target", Detections), req("options", Text)],
                classify,
            ),
            (
                "answer",
                "answer a question about the current view or a goal image",
                vec![req("image", Visual), req("question", Text)],
                answer,
            ),
            (
                "match",
                "score how well the current view matches a goal image (1 means the exact instance)",
                vec![req("image", Visual), req("target", Image)],
                match_goal,
            ),
            ("count", "number of detections", vec![req("items", Detections)], count),
            (
                "is_found",
                "declare the goal found when the target outcome is positive and check holds",
                vec![req("target", Outcome), opt("check", Bool)],
                is_found,
            ),
            (
                "eval",
                "evaluate an arithmetic or boolean expression over variables",
                vec![req("expr", Text)],
                eval,
            ),
            (
                "navigate_to",
                "walk to the nearest detection, a point or an exploration result",
                vec![req("target", Target)],
                navigate_to,
            ),
            (
                "explore_scene",
                "explore until the target is seen, using memory of earlier views",
                vec![req("target", TextOrImage), opt("query", Text)],
                explore_scene,
            ),
            (
                "return",
                "report a value as the program's answer",
                vec![req("value", Any)],
                return_value,
            ),
            (
                "turn",
                "rotate in place 30 degrees per turn",
                vec![req("direction", Text), opt("times", Number)],
                turn,
            ),
        ];
        for (name, desc, sig, handler) in table {
            r.register_module(name, desc, sig, handler)
                .expect("standard names are unique");
        }
        r
    }
}
