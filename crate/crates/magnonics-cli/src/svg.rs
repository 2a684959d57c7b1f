//! Self-contained SVG plots: a polyline chart for curves and a rect-grid
//! heatmap for dispersion maps. No styling dependencies; everything is
//! written inline so the files stand alone.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN: f64 = 70.0;

fn axis_frame(title: &str, x_label: &str, y_label: &str, bounds: (f64, f64, f64, f64)) -> String {
    let (x_min, x_max, y_min, y_max) = bounds;
    let mut s = String::new();
    s.push_str(&format!(
        "<rect x='{MARGIN}' y='{MARGIN}' width='{}' height='{}' fill='none' stroke='black'/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    s.push_str(&format!(
        "<text x='{}' y='30' text-anchor='middle' font-size='16'>{title}</text>\n",
        WIDTH / 2.0
    ));
    s.push_str(&format!(
        "<text x='{}' y='{}' text-anchor='middle' font-size='13'>{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 15.0
    ));
    s.push_str(&format!(
        "<text x='18' y='{}' text-anchor='middle' font-size='13' transform='rotate(-90 18 {})'>{y_label}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
    s.push_str(&format!(
        "<text x='{MARGIN}' y='{}' font-size='11'>{:.6e}</text>\n",
        HEIGHT - MARGIN + 20.0,
        x_min
    ));
    s.push_str(&format!(
        "<text x='{}' y='{}' text-anchor='end' font-size='11'>{:.6e}</text>\n",
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 20.0,
        x_max
    ));
    s.push_str(&format!(
        "<text x='{}' y='{}' text-anchor='end' font-size='11'>{:.3e}</text>\n",
        MARGIN - 5.0,
        HEIGHT - MARGIN,
        y_min
    ));
    s.push_str(&format!(
        "<text x='{}' y='{}' text-anchor='end' font-size='11'>{:.3e}</text>\n",
        MARGIN - 5.0,
        MARGIN + 10.0,
        y_max
    ));
    s
}

fn map_x(x: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + (x - lo) / (hi - lo).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN)
}

fn map_y(y: f64, lo: f64, hi: f64) -> f64 {
    HEIGHT - MARGIN - (y - lo) / (hi - lo).max(f64::MIN_POSITIVE) * (HEIGHT - 2.0 * MARGIN)
}

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One or more labelled curves on shared axes.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let points = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x_min, mut x_max, mut y_min, mut y_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
    }
    if y_min == y_max {
        y_max = y_min + 1.0;
    }
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{WIDTH}' height='{HEIGHT}' viewBox='0 0 {WIDTH} {HEIGHT}'>\n"
    );
    svg.push_str(&axis_frame(title, x_label, y_label, (x_min, x_max, y_min, y_max)));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                format!("{:.2},{:.2}", map_x(x, x_min, x_max), map_y(y, y_min, y_max))
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill='none' stroke='{color}' stroke-width='1.5' points='{}'/>\n",
            path.join(" ")
        ));
        if series.len() > 1 {
            svg.push_str(&format!(
                "<text x='{}' y='{}' font-size='12' fill='{color}'>{label}</text>\n",
                WIDTH - MARGIN - 160.0,
                MARGIN + 18.0 * (i as f64 + 1.0)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Row-major heatmap: `values[iy * xs.len() + ix]`, dark-to-bright scale on a
/// logarithmic ramp (dispersion maps span many decades).
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[f64],
) -> String {
    let v_max = values.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let floor = v_max * 1e-6;
    let (x_min, x_max) = (xs[0], xs[xs.len() - 1]);
    let (y_min, y_max) = (ys[0], ys[ys.len() - 1]);
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{WIDTH}' height='{HEIGHT}' viewBox='0 0 {WIDTH} {HEIGHT}'>\n"
    );
    let cell_w = (WIDTH - 2.0 * MARGIN) / xs.len() as f64;
    let cell_h = (HEIGHT - 2.0 * MARGIN) / ys.len() as f64;
    for (iy, _) in ys.iter().enumerate() {
        for (ix, _) in xs.iter().enumerate() {
            let v = values[iy * xs.len() + ix].max(floor);
            let t = (v / floor).ln() / (v_max / floor).ln();
            let r = (255.0 * t) as u8;
            let g = (64.0 * t) as u8;
            let b = (96.0 * (1.0 - t) + 32.0) as u8;
            svg.push_str(&format!(
                "<rect x='{:.2}' y='{:.2}' width='{:.2}' height='{:.2}' fill='rgb({r},{g},{b})'/>\n",
                MARGIN + ix as f64 * cell_w,
                HEIGHT - MARGIN - (iy as f64 + 1.0) * cell_h,
                cell_w + 0.5,
                cell_h + 0.5,
            ));
        }
    }
    svg.push_str(&axis_frame(title, x_label, y_label, (x_min, x_max, y_min, y_max)));
    svg.push_str("</svg>\n");
    svg
}
