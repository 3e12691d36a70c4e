use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::{SceneSpec, Shape, TexturePattern};
use crate::evaluation::{BBox, BoxSet};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScene {
    /// `height x width` intensities, one per source frame.
    pub frames: Vec<Array2<f64>>,
    /// `1` on frames inside an anomaly interval.
    pub labels: Vec<u8>,
    /// Box of the anomalous object on every anomalous frame.
    pub boxes: BoxSet,
}

/// Renders every frame of `spec`. Deterministic in `spec.seed`.
pub fn render_scene(spec: &SceneSpec) -> Result<RenderedScene> {
    spec.validate()?;
    let (w, h) = (spec.width as usize, spec.height as usize);

    let background = background_texture(spec);
    let textures: Vec<Array2<f64>> = spec
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let (hx, hy) = o.shape.half_extent();
            let (tw, th) = (2 * hx.ceil() as usize + 2, 2 * hy.ceil() as usize + 2);
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            let level = spec.background.level * o.contrast;
            match o.pattern {
                TexturePattern::Noise => {
                    Array2::from_shape_fn((th, tw), |_| level * (o.texture * rng.random_range(-1.0..=1.0)).exp())
                }
                TexturePattern::Stripes => {
                    let cols: Vec<f64> = (0..tw).map(|_| level * (o.texture * rng.random_range(-1.0..=1.0)).exp()).collect();
                    Array2::from_shape_fn((th, tw), |(_, c)| cols[c])
                }
            }
        })
        .collect();
    let tracks = trajectories(spec);

    let mut frames = Vec::with_capacity(spec.frames);
    let mut labels = Vec::with_capacity(spec.frames);
    let mut boxes = BoxSet::default();
    for f in 0..spec.frames {
        let mut img = background.clone();
        for (i, (o, track)) in spec.objects.iter().zip(&tracks).enumerate() {
            let [cx, cy] = track[f];
            let fp = footprint(&o.shape, cx, cy, w, h);
            for &(x, y, u, v) in &fp.pixels {
                img[[y, x]] = textures[i][[v.min(textures[i].nrows() - 1), u.min(textures[i].ncols() - 1)]];
            }
            let active = spec
                .anomalies
                .iter()
                .any(|a| a.object == i && (a.start_frame..a.end_frame).contains(&f));
            if active {
                if let Some(b) = fp.bbox {
                    boxes.push(f, b);
                }
            }
        }
        frames.push(img);
        labels.push(u8::from(spec.is_anomalous(f)));
    }
    Ok(RenderedScene {
        frames,
        labels,
        boxes,
    })
}

fn background_texture(spec: &SceneSpec) -> Array2<f64> {
    let bg = &spec.background;
    let block = bg.block as usize;
    let (w, h) = (spec.width as usize, spec.height as usize);
    let (bw, bh) = (w.div_ceil(block), h.div_ceil(block));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let blocks = Array2::from_shape_fn((bh, bw), |_| rng.random_range(-1.0..=1.0));
    Array2::from_shape_fn((h, w), |(y, x)| bg.level * (bg.texture * blocks[[y / block, x / block]]).exp())
}

/// Object centers per frame. The velocity applied between frame `f` and
/// `f + 1` is multiplied while `f` lies in one of the object's anomaly
/// intervals; objects reflect off the sensor border.
fn trajectories(spec: &SceneSpec) -> Vec<Vec<[f64; 2]>> {
    let dims = [spec.width as f64, spec.height as f64];
    spec.objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let (hx, hy) = o.shape.half_extent();
            let half = [hx, hy];
            let mut pos = o.position;
            let mut vel = o.velocity;
            let mut track = Vec::with_capacity(spec.frames);
            for f in 0..spec.frames {
                track.push(pos);
                let boost = spec
                    .anomalies
                    .iter()
                    .filter(|a| a.object == i && (a.start_frame..a.end_frame).contains(&f))
                    .map(|a| a.multiplier)
                    .fold(1.0, f64::max);
                for k in 0..2 {
                    let (lo, hi) = (half[k], (dims[k] - half[k]).max(half[k]));
                    pos[k] += vel[k] * boost;
                    // Fast objects may need several bounces in one step.
                    for _ in 0..8 {
                        if pos[k] < lo {
                            pos[k] = 2.0 * lo - pos[k];
                            vel[k] = -vel[k];
                        } else if pos[k] > hi {
                            pos[k] = 2.0 * hi - pos[k];
                            vel[k] = -vel[k];
                        } else {
                            break;
                        }
                    }
                    pos[k] = pos[k].clamp(lo, hi);
                }
            }
            track
        })
        .collect()
}

struct Footprint {
    /// `(x, y, u, v)`: sensor pixel and texture coordinate.
    pixels: Vec<(usize, usize, usize, usize)>,
    bbox: Option<BBox>,
}

fn footprint(shape: &Shape, cx: f64, cy: f64, w: usize, h: usize) -> Footprint {
    let mut pixels = Vec::new();
    match *shape {
        Shape::Rectangle { width, height } => {
            let x0 = (cx - width as f64 / 2.0).round() as i64;
            let y0 = (cy - height as f64 / 2.0).round() as i64;
            for dy in 0..height as i64 {
                for dx in 0..width as i64 {
                    let (x, y) = (x0 + dx, y0 + dy);
                    if (0..w as i64).contains(&x) && (0..h as i64).contains(&y) {
                        pixels.push((x as usize, y as usize, dx as usize, dy as usize));
                    }
                }
            }
        }
        Shape::Disk { radius } => {
            let x0 = (cx - radius).floor() as i64;
            let y0 = (cy - radius).floor() as i64;
            let span = (2.0 * radius).ceil() as i64 + 1;
            for dy in 0..=span {
                for dx in 0..=span {
                    let (x, y) = (x0 + dx, y0 + dy);
                    let (px, py) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if px * px + py * py <= radius * radius
                        && (0..w as i64).contains(&x)
                        && (0..h as i64).contains(&y)
                    {
                        pixels.push((x as usize, y as usize, dx as usize, dy as usize));
                    }
                }
            }
        }
    }
    let bbox = if pixels.is_empty() {
        None
    } else {
        let x_min = pixels.iter().map(|p| p.0).min().unwrap() as u32;
        let x_max = pixels.iter().map(|p| p.0).max().unwrap() as u32 + 1;
        let y_min = pixels.iter().map(|p| p.1).min().unwrap() as u32;
        let y_max = pixels.iter().map(|p| p.1).max().unwrap() as u32 + 1;
        Some(BBox::new(x_min, y_min, x_max, y_max))
    };
    Footprint { pixels, bbox }
}

#[cfg(test)]
mod tests {
    use super::super::scene::{AnomalySpec, Background, ObjectSpec};
    use super::*;

    fn spec() -> SceneSpec {
        SceneSpec {
            width: 32,
            height: 32,
            frames: 30,
            fps: 100.0,
            seed: 11,
            background: Background {
                texture: 0.3,
                ..Background::default()
            },
            objects: vec![ObjectSpec {
                shape: Shape::Rectangle { width: 6, height: 4 },
                position: [8.0, 8.0],
                velocity: [0.5, 0.0],
                contrast: 2.0,
                texture: 0.2,
                pattern: TexturePattern::Noise,
            }],
            anomalies: vec![AnomalySpec {
                start_frame: 10,
                end_frame: 20,
                object: 0,
                multiplier: 4.0,
            }],
        }
    }

    #[test]
    fn no_objects_gives_constant_frames() {
        let s = SceneSpec {
            objects: vec![],
            anomalies: vec![],
            ..spec()
        };
        let r = render_scene(&s).unwrap();
        assert!(r.frames.windows(2).all(|w| w[0] == w[1]));
        assert!(r.labels.iter().all(|&l| l == 0));
        assert!(r.boxes.is_empty());
    }

    #[test]
    fn labels_follow_anomaly_interval() {
        let r = render_scene(&spec()).unwrap();
        for (f, &l) in r.labels.iter().enumerate() {
            assert_eq!(l == 1, (10..20).contains(&f), "frame {f}");
        }
        assert_eq!(r.boxes.frames().collect::<Vec<_>>(), (10..20).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_frames() {
        assert_eq!(render_scene(&spec()).unwrap(), render_scene(&spec()).unwrap());
        let mut other = spec();
        other.seed = 12;
        assert_ne!(render_scene(&spec()).unwrap().frames, render_scene(&other).unwrap().frames);
    }

    #[test]
    fn burst_moves_object_faster() {
        let s = spec();
        let t = &trajectories(&s)[0];
        assert!((t[10][0] - t[9][0] - 0.5).abs() < 1e-12);
        assert!((t[11][0] - t[10][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn objects_stay_on_sensor() {
        let mut s = spec();
        s.objects[0].velocity = [3.0, 2.5];
        s.frames = 200;
        s.anomalies[0].multiplier = 9.0;
        for track in trajectories(&s) {
            for [x, y] in track {
                assert!((3.0..=29.0).contains(&x) && (2.0..=30.0).contains(&y));
            }
        }
    }
}
