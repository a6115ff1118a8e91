use super::Scene;

const T_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Floor,
    /// Index into [`Scene::boxes`].
    Box(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Distance along the (unit) ray.
    pub t: f64,
    pub point: [f64; 3],
    pub surface: Surface,
}

/// Slab test; returns the entry distance of a ray starting outside the box.
fn ray_box(origin: [f64; 3], dir: [f64; 3], min: [f64; 3], max: [f64; 3]) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for axis in 0..3 {
        let o = origin[axis];
        let d = dir[axis];
        if d == 0.0 {
            if o < min[axis] || o > max[axis] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut t0, mut t1) = ((min[axis] - o) * inv, (max[axis] - o) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    (t_near >= T_MIN).then_some(t_near)
}

pub(super) fn first_hit(scene: &Scene, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
    let mut best: Option<(f64, Surface)> = None;
    for (i, b) in scene.boxes.iter().enumerate() {
        if let Some(t) = ray_box(origin, dir, b.min, b.max) {
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, Surface::Box(i)));
            }
        }
    }
    if dir[2] < 0.0 && origin[2] > scene.floor_height {
        let t = (origin[2] - scene.floor_height) / -dir[2];
        if best.map_or(true, |(bt, _)| t < bt) {
            best = Some((t, Surface::Floor));
        }
    }
    best.map(|(t, surface)| {
        let mut point = [
            origin[0] + t * dir[0],
            origin[1] + t * dir[1],
            origin[2] + t * dir[2],
        ];
        if surface == Surface::Floor {
            point[2] = scene.floor_height;
        }
        Hit { t, point, surface }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_entry_distance() {
        let t = ray_box([0.0, 0.0, 0.5], [1.0, 0.0, 0.0], [2.0, -1.0, 0.0], [3.0, 1.0, 1.0]);
        assert_eq!(t, Some(2.0));
        let miss = ray_box([0.0, 0.0, 1.5], [1.0, 0.0, 0.0], [2.0, -1.0, 0.0], [3.0, 1.0, 1.0]);
        assert_eq!(miss, None);
        let behind = ray_box([0.0, 0.0, 0.5], [-1.0, 0.0, 0.0], [2.0, -1.0, 0.0], [3.0, 1.0, 1.0]);
        assert_eq!(behind, None);
    }
}
