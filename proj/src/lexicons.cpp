#include "nestag/corpus.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nestag {

namespace {

// Word lists for the synthesizer. Orthography follows 19th century usage
// where it differs from today (hence "faubourg St-Denis" style entries in
// the street list rather than fully spelled forms).

const std::vector<std::string> kStreets = {
    "Saint-Honoré", "Rivoli", "Montmartre", "Saint-Denis", "Saint-Martin",
    "du Temple", "de la Paix", "Vivienne", "Richelieu", "des Petits-Champs",
    "Neuve-des-Capucines", "de la Chaussée-d'Antin", "du Faubourg-Saint-Antoine",
    "du Faubourg-Saint-Denis", "du Faubourg-Saint-Martin", "du Faubourg-Montmartre",
    "de la Victoire", "Laffitte", "Le Peletier", "Drouot", "Rochechouart",
    "des Martyrs", "de Clichy", "d'Amsterdam", "de Londres", "de Moscou",
    "Saint-Lazare", "de la Pépinière", "du Rocher", "de Courcelles",
    "de Monceau", "de Prony", "de Tocqueville", "Cardinet", "Legendre",
    "des Batignolles", "de la Grande-Truanderie", "des Lombards", "Quincampoix",
    "Beaubourg", "du Renard", "des Archives", "Vieille-du-Temple", "de Turenne",
    "Saint-Claude", "de Bretagne", "Charlot", "de Saintonge", "du Pont-aux-Choux",
    "Amelot", "Popincourt", "de la Roquette", "de Charonne", "de Montreuil",
    "de Reuilly", "de Bercy", "de Charenton", "Traversière", "de Lyon",
    "du Bac", "de Grenelle", "de Varenne", "de Babylone", "de Sèvres",
    "du Cherche-Midi", "de Vaugirard", "de Rennes", "d'Assas", "Notre-Dame-des-Champs",
    "du Montparnasse", "de la Gaîté", "Daguerre", "des Plantes", "de la Tombe-Issoire",
    "de la Glacière", "Mouffetard", "Monge", "des Écoles", "Saint-Jacques",
    "Gay-Lussac", "Soufflot", "de Verneuil", "des Canettes", "de Buci",
};

const std::vector<std::string> kProfessions = {
    "épicier", "boulanger", "boucher", "charcutier", "pâtissier",
    "confiseur", "fruitier", "crémier", "marchand de vins", "limonadier",
    "restaurateur", "traiteur", "tailleur", "couturière", "modiste",
    "chapelier", "gantier", "bottier", "cordonnier", "chemisier",
    "mercier", "bonnetier", "drapier", "lingère", "teinturier",
    "blanchisseur", "coiffeur", "parfumeur", "bijoutier", "joaillier",
    "horloger", "orfèvre", "graveur", "doreur", "miroitier",
    "ébéniste", "menuisier", "tapissier", "tourneur", "sculpteur",
    "serrurier", "ferblantier", "chaudronnier", "fondeur", "mécanicien",
    "charron", "carrossier", "sellier", "bourrelier", "tonnelier",
    "imprimeur", "libraire", "relieur", "papetier", "photographe",
    "pharmacien", "herboriste", "droguiste", "quincaillier", "fumiste",
    "plombier", "couvreur", "peintre en bâtiments", "vitrier", "architecte",
    "avocat", "notaire", "huissier", "banquier", "agent de change",
    "commissionnaire", "courtier", "fabricant de bronzes", "fabricant de meubles",
    "marchand de bois", "marchand de charbons", "nourrisseur", "loueur de voitures",
};

const std::vector<std::string> kSurnames = {
    "Martin", "Bernard", "Thomas", "Petit", "Robert", "Richard", "Durand",
    "Dubois", "Moreau", "Laurent", "Simon", "Michel", "Lefebvre", "Leroy",
    "Roux", "David", "Bertrand", "Morel", "Fournier", "Girard", "Bonnet",
    "Dupont", "Lambert", "Fontaine", "Rousseau", "Vincent", "Muller",
    "Lefèvre", "Faure", "André", "Mercier", "Blanc", "Guérin", "Boyer",
    "Garnier", "Chevalier", "François", "Legrand", "Gauthier", "Garcia",
    "Perrin", "Robin", "Clément", "Morin", "Nicolas", "Henry", "Roussel",
    "Mathieu", "Gautier", "Masson", "Marchand", "Duval", "Denis", "Dumont",
    "Marie", "Lemaire", "Noël", "Meyer", "Dufour", "Meunier", "Brun",
    "Blanchard", "Giraud", "Joly", "Rivière", "Lucas", "Brunet", "Gaillard",
    "Barbier", "Arnaud", "Martinez", "Gérard", "Roche", "Renard", "Schmitt",
    "Roy", "Leroux", "Colin", "Vidal", "Caron", "Picard", "Roger", "Fabre",
    "Aubert", "Lemoine", "Renaud", "Dumas", "Lacroix", "Olivier", "Philippe",
    "Bourgeois", "Pierre", "Benoît", "Rey", "Leclerc", "Payet", "Rolland",
    "Aubery", "Batton", "Cifret", "Chardon",
};

const std::vector<std::string> kFirstnames = {
    "Jean", "Pierre", "Louis", "Charles", "Joseph", "Henri", "Jules",
    "François", "Auguste", "Eugène", "Paul", "Victor", "Émile", "Alexandre",
    "Alphonse", "Antoine", "Gustave", "Édouard", "Ernest", "Léon",
    "Alfred", "Albert", "Georges", "Adolphe", "Ferdinand", "Théodore",
    "Marie", "Jeanne", "Marguerite", "Louise", "Joséphine", "Anne",
    "Claude", "Nicolas", "Étienne", "Michel", "Armand", "Prosper",
    "Hippolyte", "Célestin", "Anatole", "Narcisse",
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open lexicon file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  if (out.empty()) throw std::invalid_argument("empty lexicon file: " + path);
  return out;
}

}  // namespace

const Lexicons& Lexicons::builtin() {
  static const Lexicons lex{kStreets, kProfessions, kSurnames, kFirstnames};
  return lex;
}

Lexicons Lexicons::load_dir(const std::string& dir) {
  Lexicons lex;
  lex.streets = read_lines(dir + "/streets.txt");
  lex.professions = read_lines(dir + "/professions.txt");
  lex.surnames = read_lines(dir + "/surnames.txt");
  lex.firstnames = read_lines(dir + "/firstnames.txt");
  return lex;
}

}  // namespace nestag
