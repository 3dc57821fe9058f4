//! Bundled names, actions and events for the prompt corpora.

/// Common first names that are a single token in widely used tokenizers.
pub const NAMES: &[&str] = &[
    "Anna", "Neil", "Emma", "Kevin", "Lucy", "Luke", "William", "Michael", "Mark", "Jack",
    "Brandon", "Bob", "Jerry", "Matt", "Josh", "Frank", "Emily", "Blake", "Rose", "Robert",
    "Martin", "Richard", "April", "Jason", "Connor", "Rachel", "Maria", "George", "Laura",
    "Hunter", "Andrew", "Leon", "Alice", "Steve", "Charlie", "John", "Paul", "Peter", "David",
    "James", "Daniel", "Thomas", "Sarah", "Kate", "Jane", "Mary", "Linda", "Susan", "Lisa",
    "Nancy", "Karen", "Helen", "Amy", "Anne", "Ben", "Sam", "Tom", "Tim", "Joe", "Dan", "Adam",
    "Eric", "Ryan", "Sean", "Chris", "Jeff", "Scott", "Gary", "Carl", "Fred", "Henry", "Oscar",
    "Victor", "Simon", "Julia", "Grace", "Chloe", "Ella", "Mia", "Leo", "Max", "Hugo", "Ivan",
    "Nina", "Sophie", "Diana", "Clara",
];

/// Past-tense actions for the calendar-date tasks.
pub const DATE_ACTIONS: &[&str] = &[
    "took a bus",
    "donated clothes",
    "visited a new city",
    "mowed the lawn",
    "painted a mural",
    "left for vacation",
    "returned from vacation",
    "bought a new car",
    "planted a tree",
    "went to the dentist",
    "moved to a new house",
    "adopted a dog",
    "ran a marathon",
    "baked a cake",
    "started a new job",
    "visited the museum",
    "wrote a letter",
    "cleaned the attic",
    "got a haircut",
    "repaired the fence",
];

/// An activity with a start date and a length: `(phrase, link, noun)` as in
/// "<name> <phrase> on <date> <link> <duration>." and "The person whose
/// <noun> ends first is".
pub const DURATION_ACTIONS: &[(&str, &str, &str)] = &[
    ("is starting a workshop", "lasting", "workshop"),
    (
        "is starting their internship",
        "and is set to run for",
        "internship",
    ),
    (
        "runs a festival booth",
        "staying open for",
        "festival booth",
    ),
    ("is starting a course", "lasting", "course"),
    ("opens an exhibition", "running for", "exhibition"),
    (
        "is beginning a training program",
        "lasting",
        "training program",
    ),
    ("starts a project", "scheduled to last", "project"),
    ("is starting a diet", "lasting", "diet"),
    ("begins a trip", "lasting", "trip"),
    ("is starting a renovation", "expected to take", "renovation"),
];

/// Unit of a duration or frequency expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Day,
    Week,
    Month,
    Year,
}

/// The 38 durations, duplicates included, in the order they are listed.
pub const DURATIONS: &[(u32, Unit)] = &[
    (1, Unit::Day),
    (2, Unit::Day),
    (3, Unit::Day),
    (4, Unit::Day),
    (5, Unit::Day),
    (6, Unit::Day),
    (7, Unit::Day),
    (8, Unit::Day),
    (9, Unit::Day),
    (10, Unit::Day),
    (1, Unit::Week),
    (2, Unit::Week),
    (3, Unit::Week),
    (4, Unit::Week),
    (7, Unit::Day),
    (10, Unit::Day),
    (14, Unit::Day),
    (21, Unit::Day),
    (25, Unit::Day),
    (30, Unit::Day),
    (1, Unit::Month),
    (2, Unit::Month),
    (3, Unit::Month),
    (4, Unit::Month),
    (6, Unit::Month),
    (8, Unit::Month),
    (4, Unit::Week),
    (6, Unit::Week),
    (8, Unit::Week),
    (10, Unit::Week),
    (1, Unit::Year),
    (2, Unit::Year),
    (3, Unit::Year),
    (4, Unit::Year),
    (12, Unit::Month),
    (18, Unit::Month),
    (24, Unit::Month),
    (36, Unit::Month),
];

/// Recurrence frequencies from daily to every six years.
pub const FREQUENCIES: &[(u32, Unit)] = &[
    (1, Unit::Day),
    (2, Unit::Day),
    (3, Unit::Day),
    (1, Unit::Week),
    (2, Unit::Week),
    (3, Unit::Week),
    (1, Unit::Month),
    (2, Unit::Month),
    (3, Unit::Month),
    (6, Unit::Month),
    (1, Unit::Year),
    (2, Unit::Year),
    (3, Unit::Year),
    (4, Unit::Year),
    (5, Unit::Year),
    (6, Unit::Year),
];

/// Recurring actions with the range of periods (in days) they plausibly
/// occur at.
pub const PERIODIC_ACTIONS: &[(&str, u32, u32)] = &[
    ("takes a shower", 1, 3),
    ("waters the plants", 1, 14),
    ("goes to the gym", 1, 30),
    ("calls their parents", 1, 30),
    ("goes grocery shopping", 1, 14),
    ("changes the bed sheets", 7, 30),
    ("cleans the windows", 7, 183),
    ("gets a haircut", 14, 183),
    ("visits their grandparents", 7, 365),
    ("donates blood", 61, 365),
    ("visits the zoo", 30, 1096),
    ("services the car", 91, 731),
    ("goes to the dentist", 91, 1096),
    ("travels abroad", 30, 1461),
    ("goes on a cruise", 365, 2192),
    ("buys a new phone", 365, 2192),
    ("repaints the house", 731, 2192),
    ("replaces the mattress", 731, 2192),
];

/// `(present, past)` forms of everyday actions for the time-of-day tasks.
pub const TIME_ACTIONS: &[(&str, &str)] = &[
    ("watches a movie", "watched a movie"),
    ("naps", "napped"),
    ("watches TV", "watched TV"),
    ("goes for a walk", "went for a walk"),
    ("writes in a journal", "wrote in a journal"),
    ("eats lunch", "ate lunch"),
    ("reads the news", "read the news"),
    ("takes a bath", "took a bath"),
    ("calls a friend", "called a friend"),
    ("plays the piano", "played the piano"),
    ("feeds the cat", "fed the cat"),
    ("goes for a run", "went for a run"),
    ("drinks coffee", "drank coffee"),
    ("does the laundry", "did the laundry"),
];

/// Events of the twentieth century with their dates, phrased to follow
/// "was born on the day".
pub const NOTABLE_EVENTS: &[(&str, i32, u32, u32)] = &[
    ("Queen Victoria died", 1901, 1, 22),
    ("the first Nobel Prizes were awarded", 1901, 12, 10),
    ("Pius X became Pope", 1903, 8, 4),
    (
        "the Wright brothers made their first powered flight",
        1903,
        12,
        17,
    ),
    ("the San Francisco earthquake struck", 1906, 4, 18),
    ("Roald Amundsen reached the South Pole", 1911, 12, 14),
    ("the Titanic sank", 1912, 4, 15),
    (
        "Archduke Franz Ferdinand was assassinated in Sarajevo",
        1914,
        6,
        28,
    ),
    ("the Panama Canal opened", 1914, 8, 15),
    ("the Lusitania was sunk", 1915, 5, 7),
    ("the October Revolution began in Petrograd", 1917, 11, 7),
    (
        "the armistice ending the First World War was signed",
        1918,
        11,
        11,
    ),
    ("the Treaty of Versailles was signed", 1919, 6, 28),
    ("the Nineteenth Amendment was certified", 1920, 8, 26),
    ("James Joyce published Ulysses", 1922, 2, 2),
    ("Howard Carter found the tomb of Tutankhamun", 1922, 11, 4),
    (
        "Charles Lindbergh landed in Paris after crossing the Atlantic",
        1927,
        5,
        21,
    ),
    ("Herbert Hoover was inaugurated as President", 1929, 3, 4),
    ("the Wall Street Crash reached Black Tuesday", 1929, 10, 29),
    ("Gandhi began the Salt March", 1930, 3, 12),
    ("the Empire State Building opened", 1931, 5, 1),
    ("Adolf Hitler became Chancellor of Germany", 1933, 1, 30),
    (
        "Franklin D. Roosevelt was first inaugurated as President",
        1933,
        3,
        4,
    ),
    ("Edward VIII abdicated the British throne", 1936, 12, 11),
    ("the Hindenburg airship burned at Lakehurst", 1937, 5, 6),
    ("the Golden Gate Bridge opened", 1937, 5, 27),
    ("Amelia Earhart disappeared over the Pacific", 1937, 7, 2),
    ("Germany invaded Poland", 1939, 9, 1),
    ("Japan attacked Pearl Harbor", 1941, 12, 7),
    ("Allied troops landed in Normandy", 1944, 6, 6),
    ("the atomic bomb was dropped on Hiroshima", 1945, 8, 6),
    (
        "Japan signed the surrender aboard the USS Missouri",
        1945,
        9,
        2,
    ),
    ("the United Nations Charter came into force", 1945, 10, 24),
    ("India became independent", 1947, 8, 15),
    ("Mahatma Gandhi was assassinated", 1948, 1, 30),
    ("the State of Israel was proclaimed", 1948, 5, 14),
    ("NATO was founded", 1949, 4, 4),
    ("the People's Republic of China was proclaimed", 1949, 10, 1),
    ("the Korean War began", 1950, 6, 25),
    ("Joseph Stalin died", 1953, 3, 5),
    (
        "Edmund Hillary and Tenzing Norgay reached the summit of Everest",
        1953,
        5,
        29,
    ),
    ("Elizabeth II was crowned", 1953, 6, 2),
    ("Egypt nationalized the Suez Canal", 1956, 7, 26),
    ("the Treaty of Rome was signed", 1957, 3, 25),
    ("Sputnik 1 was launched", 1957, 10, 4),
    ("Fulgencio Batista fled Cuba", 1959, 1, 1),
    ("Yuri Gagarin orbited the Earth", 1961, 4, 12),
    ("construction of the Berlin Wall began", 1961, 8, 13),
    (
        "Martin Luther King Jr. gave the I Have a Dream speech",
        1963,
        8,
        28,
    ),
    ("John F. Kennedy was assassinated", 1963, 11, 22),
    ("the Six-Day War began", 1967, 6, 5),
    (
        "the first human heart transplant was performed",
        1967,
        12,
        3,
    ),
    ("Apollo 11 landed on the Moon", 1969, 7, 20),
    ("the Watergate break-in took place", 1972, 6, 17),
    ("Richard Nixon resigned as President", 1974, 8, 9),
    ("Saigon fell", 1975, 4, 30),
    ("the Concorde made its first commercial flight", 1976, 1, 21),
    ("Elvis Presley died", 1977, 8, 16),
    ("John Paul II was elected Pope", 1978, 10, 16),
    ("Ayatollah Khomeini returned to Iran", 1979, 2, 1),
    ("Margaret Thatcher became Prime Minister", 1979, 5, 4),
    ("Mount St. Helens erupted", 1980, 5, 18),
    ("John Lennon was shot", 1980, 12, 8),
    ("the Space Shuttle Challenger broke apart", 1986, 1, 28),
    ("the Chernobyl reactor exploded", 1986, 4, 26),
    ("the MV Doña Paz sank", 1987, 12, 20),
    (
        "the independent State of Palestine was proclaimed",
        1988,
        11,
        15,
    ),
    ("the Berlin Wall fell", 1989, 11, 9),
    ("Nelson Mandela was released from prison", 1990, 2, 11),
    ("the Hubble Space Telescope was launched", 1990, 4, 24),
    ("Germany was reunified", 1990, 10, 3),
    ("the Soviet Union was dissolved", 1991, 12, 26),
    ("the Maastricht Treaty was signed", 1992, 2, 7),
    ("the Channel Tunnel opened", 1994, 5, 6),
    (
        "Nelson Mandela was inaugurated as President of South Africa",
        1994,
        5,
        10,
    ),
    ("the Dayton Accords were signed", 1995, 12, 14),
    ("Hong Kong was handed over to China", 1997, 7, 1),
    ("Princess Diana died", 1997, 8, 31),
    ("the Good Friday Agreement was signed", 1998, 4, 10),
    ("the euro was introduced", 1999, 1, 1),
];

/// The bundled city table (city, country, lat, lon, population).
pub const CITIES_CSV: &str = include_str!("../../data/cities.csv");
