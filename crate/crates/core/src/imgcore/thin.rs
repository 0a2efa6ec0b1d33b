use super::BinaryImage;

// Neighbour offsets P2..P9, clockwise from north.
const NEIGHBOURS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Zhang-Suen two-subiteration thinning. Pixels outside the raster count as valley.
pub fn thin(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    let (w, h) = (img.width(), img.height());
    let mut marked = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            marked.clear();
            for y in 0..h {
                for x in 0..w {
                    if out.get(x, y) && deletable(&out, x as isize, y as isize, pass) {
                        marked.push((x, y));
                    }
                }
            }
            for &(x, y) in &marked {
                out.set(x, y, false);
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            return out;
        }
    }
}

fn deletable(img: &BinaryImage, x: isize, y: isize, pass: usize) -> bool {
    let p: [bool; 8] = NEIGHBOURS.map(|(dx, dy)| img.get_or_valley(x + dx, y + dy));
    let b = p.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
    if pass == 0 {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

/// Number of 8-connected ridge components.
pub fn count_components(img: &BinaryImage) -> usize {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..w * h {
        if !img.bits()[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if img.get_or_valley(nx, ny) {
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}
